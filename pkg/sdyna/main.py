#!/usr/bin/env python3
"""Main entry point for the sdyna command line"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from sdyna import __version__
from sdyna.experiments.csv_output import write_rows
from sdyna.experiments.metrics import model_accuracy, policy_error
from sdyna.experiments.runner import (cached_problem, evaluation_config, load_solution,
                                      reference_solution, run_experiment, solve_offline)
from sdyna.fmdp.problems import load_problem, resolve_problem
from sdyna.planning.planner import PlannerConfig
from sdyna.trees.decision_tree import node_count
from sdyna.utils.config import ConfigManager, ExperimentConfig, FAMILIES
from sdyna.utils.errors import SdynaError

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(verbose: bool = False, quiet: bool = False) -> Path:
    """DEBUG to the cache log file, INFO (or as requested) to the console"""
    cache_dir = os.environ.get('SDYNA_CACHE_DIR')
    log_file = (Path(cache_dir) if cache_dir else Path.home() / '.cache' / 'sdyna') / 'sdyna.log'
    log_file.parent.mkdir(parents=True, exist_ok=True)

    # File handler with DEBUG; console on stderr so CSV on stdout stays clean
    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(logging.DEBUG)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO)

    logging.basicConfig(
        level=logging.DEBUG,
        format=LOG_FORMAT,
        handlers=[file_handler, console_handler],
        force=True,
    )
    return log_file


def _float_list(text: str) -> List[float]:
    return [float(x) for x in text.split(',') if x.strip()]


def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(',') if x.strip()]


def _str_list(text: str) -> List[str]:
    return [x.strip() for x in text.split(',') if x.strip()]


def _add_experiment_options(parser: argparse.ArgumentParser):
    # defaults stay None so settings and profiles can fill them
    parser.add_argument('--problem', help='problem file or builtin:coffee|process|linear:N|expon:N|noisy:N:THETA')
    parser.add_argument('--agent', choices=['spiti', 'dynaq', 'random', 'optimal'])
    parser.add_argument('--mode', choices=['online', 'tau-sweep', 'generalization'])
    parser.add_argument('--tau', type=float, help='chi-square split threshold')
    parser.add_argument('--epsilon', type=float)
    parser.add_argument('--gamma', type=float)
    parser.add_argument('--gamma-report', dest='gamma_report', type=float)
    parser.add_argument('--steps', type=int)
    parser.add_argument('--runs', type=int)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--metrics', type=_str_list, help='comma list of xi,qchi2')
    parser.add_argument('--metric-every', dest='metric_every', type=int)
    parser.add_argument('--out', help='CSV output path (stdout when omitted)')
    parser.add_argument('--taus', type=_float_list, help='comma list of tau values')
    parser.add_argument('--sizes', type=_int_list, help='comma list of problem sizes')
    parser.add_argument('--family', choices=list(FAMILIES))
    parser.add_argument('--theta', type=float)
    parser.add_argument('--workers', type=int)
    parser.add_argument('--model-out', dest='model_out', help='directory for learned models')
    parser.add_argument('--profile', help='start from a saved profile')
    parser.add_argument('--save-profile', dest='save_profile', help='store the resolved configuration')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sdyna', description='Learn and solve factored MDPs with decision trees')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug output on the console')
    parser.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='run an experiment and write CSV rows')
    _add_experiment_options(run)

    sweep = sub.add_parser('sweep-tau', help='tau sweep on one random trajectory per run')
    _add_experiment_options(sweep)

    solve = sub.add_parser('solve', help='compute optimal value and policy trees offline')
    solve.add_argument('--problem', required=True)
    solve.add_argument('--gamma', type=float)
    solve.add_argument('--out', help='JSON dump path (stdout summary only when omitted)')

    evaluate = sub.add_parser('eval', help='score a learned model or a policy dump')
    evaluate.add_argument('--problem', required=True)
    evaluate.add_argument('--model', required=True, help='problem-format model (qchi2) or tree dump (xi)')
    evaluate.add_argument('--metric', choices=['xi', 'qchi2'], required=True)
    evaluate.add_argument('--gamma', type=float)
    return parser


def resolve_config(args: argparse.Namespace, manager: Optional[ConfigManager] = None) -> ExperimentConfig:
    """Explicit flag > profile > settings.json > default"""
    manager = manager or ConfigManager()
    if args.profile:
        config = manager.load_profile(args.profile)
    else:
        config = ExperimentConfig()
        for key, value in manager.load_settings().to_dict().items():
            setattr(config, key, value)
    for key in ExperimentConfig.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    if args.command == 'sweep-tau':
        config.mode = 'tau-sweep'
    return config


def cmd_run(args: argparse.Namespace) -> int:
    manager = ConfigManager()
    config = resolve_config(args, manager)
    config.validate()
    # fail fast on a bad problem reference instead of one error row per replica
    cached_problem(config.problem)
    if args.save_profile:
        manager.save_profile(args.save_profile, config)
    logger.info(f"Running {config.mode} with {config.agent} on {config.problem} "
                f"({config.runs} runs x {config.steps} steps)")
    rows = run_experiment(config)
    if not config.out:
        write_rows(rows, sys.stdout)
    failed = sum(1 for row in rows if row.error)
    if failed:
        logger.warning(f"{failed} of {config.runs} replicas failed; see error rows")
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    spec = resolve_problem(args.problem)
    gamma = args.gamma if args.gamma is not None else spec.discount
    value, policy, _ = solve_offline(spec, PlannerConfig(gamma=gamma), args.out)
    print(f"{spec.name}: value tree {node_count(value)} nodes, policy tree {node_count(policy)} nodes")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    spec = resolve_problem(args.problem)
    gamma = args.gamma if args.gamma is not None else spec.discount
    if args.metric == 'qchi2':
        report = model_accuracy(spec, load_problem(args.model))
        print(f"q_chi2={report.q_overall!r}")
    else:
        _, policy = load_solution(args.model, spec)
        tolerance = ExperimentConfig().evaluation_tolerance
        v_star, _ = reference_solution(spec, gamma, tolerance)
        report = policy_error(spec, policy, v_star, evaluation_config(gamma, tolerance))
        print(f"xi={report.xi!r}")
    return 0


COMMANDS = {
    'run': cmd_run,
    'sweep-tau': cmd_run,
    'solve': cmd_solve,
    'eval': cmd_eval,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command, map errors to exit codes"""
    args = build_parser().parse_args(argv)
    log_file = setup_logging(args.verbose, args.quiet)
    logger.debug(f"sdyna {__version__} starting: {args.command} (log file {log_file})")
    try:
        return COMMANDS[args.command](args)
    except SdynaError as e:
        logger.debug(f"{type(e).__name__} in {args.command}", exc_info=True)
        print(f"sdyna: error: {e}", file=sys.stderr)
        return e.exit_code
    except FileNotFoundError as e:
        print(f"sdyna: error: {e}", file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
