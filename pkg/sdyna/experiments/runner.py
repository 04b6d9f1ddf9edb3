#!/usr/bin/env python3
"""Experiment protocols: online learning, tau sweep and generalization

Every replica draws its randomness from default_rng streams spawned from
seed + run, so a replica's rows depend only on the configuration and its
index. Rows come back ordered by run whatever the completion order.
"""

import functools
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from sdyna.agents.base import Agent
from sdyna.agents.baselines import OptimalAgent, RandomAgent
from sdyna.agents.dynaq import DynaQAgent
from sdyna.agents.exploration import ExplorationConfig
from sdyna.agents.spiti import SpitiAgent
from sdyna.experiments.csv_output import CsvRow, write_csv
from sdyna.experiments.metrics import model_accuracy, policy_error
from sdyna.fmdp.environment import Environment, Transition
from sdyna.fmdp.model import LearnedModel, ProblemSpec
from sdyna.fmdp.problems import SCHEMA_VERSION, generate, resolve_problem, save_problem
from sdyna.planning.planner import (PlannerConfig, PolicyTree, ValueTree, policy_to_labels,
                                    svi_solve)
from sdyna.trees.decision_tree import tree_from_dict, tree_to_dict
from sdyna.trees.induction import InductionConfig
from sdyna.utils.config import ExperimentConfig
from sdyna.utils.errors import ProblemFormatError

logger = logging.getLogger(__name__)


def replica_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """Independent generators spawned from one seed"""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


@functools.lru_cache(maxsize=8)
def cached_problem(reference: str) -> ProblemSpec:
    return resolve_problem(reference)


def evaluation_config(gamma: float, tolerance: float) -> PlannerConfig:
    return PlannerConfig(gamma=gamma, span_tolerance=tolerance, sup_tolerance=tolerance,
                         max_iterations=100000)


def reference_solution(spec: ProblemSpec, gamma: float, tolerance: float) -> Tuple[ValueTree, PolicyTree]:
    """V* and pi* solved tightly enough to serve as the baseline of relative error"""
    return svi_solve(spec, evaluation_config(gamma, tolerance))


@functools.lru_cache(maxsize=8)
def _cached_reference(reference: str, gamma: float, tolerance: float) -> Tuple[ValueTree, PolicyTree]:
    return reference_solution(cached_problem(reference), gamma, tolerance)


def random_trajectory(spec: ProblemSpec, steps: int, rng: np.random.Generator) -> List[Transition]:
    """Uniformly random actions for steps transitions"""
    env = Environment(spec, rng)
    return [env.step(int(rng.integers(spec.n_actions))) for _ in range(steps)]


def trajectory_digest(trajectory: Sequence[Transition]) -> str:
    """SHA-256 over the transition stream"""
    digest = hashlib.sha256()
    for tr in trajectory:
        digest.update(repr(tr.as_tuple()).encode('utf-8'))
    return digest.hexdigest()


def build_agent(config: ExperimentConfig, spec: ProblemSpec, run: int,
                rng: np.random.Generator) -> Agent:
    exploration = ExplorationConfig(epsilon=config.epsilon, gamma=config.gamma,
                                    gamma_report=config.gamma_report, seed=config.seed + run)
    if config.agent == 'spiti':
        return SpitiAgent(spec, InductionConfig(config.tau, config.restructure_margin),
                          PlannerConfig(gamma=config.gamma), exploration, rng)
    if config.agent == 'dynaq':
        return DynaQAgent(spec, exploration=exploration, rng=rng)
    if config.agent == 'random':
        return RandomAgent(spec, exploration, rng)
    if config.agent == 'optimal':
        _, policy = _cached_reference(config.problem, config.gamma, config.evaluation_tolerance)
        return OptimalAgent(spec, policy, exploration=exploration, rng=rng)
    raise ValueError(f"unknown agent '{config.agent}'")


def run_online(config: ExperimentConfig, run: int) -> List[CsvRow]:
    """One agent acting for config.steps steps, metrics every metric_every steps"""
    spec = cached_problem(config.problem)
    env_rng, agent_rng = replica_rngs(config.seed + run, 2)
    env = Environment(spec, env_rng)
    agent = build_agent(config, spec, run, agent_rng)
    v_star = None
    if 'xi' in config.metrics:
        v_star, _ = _cached_reference(config.problem, config.gamma, config.evaluation_tolerance)
    evaluation = evaluation_config(config.gamma, config.evaluation_tolerance)

    rows = []
    for t in range(config.steps):
        record = agent.step(env)
        xi = q_chi2 = None
        if (t + 1) % config.metric_every == 0 or t == config.steps - 1:
            if v_star is not None:
                xi = policy_error(spec, agent.greedy_policy(), v_star, evaluation).xi
            if 'qchi2' in config.metrics and isinstance(agent, SpitiAgent):
                q_chi2 = model_accuracy(spec, agent.model).q_overall
        rows.append(CsvRow(run=run, t=t, action=spec.actions[record.action], reward=record.reward,
                           r_disc=record.r_disc, model_nodes=record.model_nodes, xi=xi,
                           q_chi2=q_chi2, seed=config.seed + run))

    if config.model_out and isinstance(agent, SpitiAgent):
        save_problem(agent.model.to_spec(), Path(config.model_out) / f"run{run}.json")
    logger.info(f"Replica {run} ({config.agent}) finished: R_disc {agent.trace.current:.4f}, "
                f"model {agent.model_nodes()} nodes")
    return rows


def learn_from_trajectory(spec: ProblemSpec, trajectory: Sequence[Transition],
                          config: InductionConfig) -> LearnedModel:
    return LearnedModel.for_problem(spec, config).add_trajectory([tr.as_tuple() for tr in trajectory])


def run_tau_sweep(config: ExperimentConfig, run: int) -> List[CsvRow]:
    """One random trajectory, one model per tau learned from it, offline SVI on each"""
    spec = cached_problem(config.problem)
    (rng,) = replica_rngs(config.seed + run, 1)
    trajectory = random_trajectory(spec, config.steps, rng)
    logger.debug(f"Replica {run}: trajectory {trajectory_digest(trajectory)[:12]}")
    evaluation = evaluation_config(config.gamma, config.evaluation_tolerance)
    metrics = config.metrics or ['xi']
    v_star = None
    if 'xi' in metrics:
        v_star, _ = _cached_reference(config.problem, config.gamma, config.evaluation_tolerance)

    rows = []
    for tau in config.taus:
        model = learn_from_trajectory(spec, trajectory, InductionConfig(tau, config.restructure_margin))
        xi = q_chi2 = None
        if 'xi' in metrics:
            _, policy = svi_solve(model.to_spec(), PlannerConfig(gamma=config.gamma))
            xi = policy_error(spec, policy, v_star, evaluation).xi
        if 'qchi2' in metrics:
            q_chi2 = model_accuracy(spec, model).q_overall
        rows.append(CsvRow(run=run, t=config.steps, model_nodes=model.node_count(), xi=xi,
                           q_chi2=q_chi2, seed=config.seed + run, tau=tau))
        logger.debug(f"Replica {run}, tau {tau}: {model.node_count()} nodes, xi {xi}")
    return rows


def run_generalization(config: ExperimentConfig, run: int) -> List[CsvRow]:
    """Model accuracy after a random trajectory on problems of growing size"""
    rngs = replica_rngs(config.seed + run, len(config.sizes))
    rows = []
    for n, rng in zip(config.sizes, rngs):
        spec = generate(config.family, n, config.theta)
        trajectory = random_trajectory(spec, config.steps, rng)
        model = learn_from_trajectory(spec, trajectory, InductionConfig(config.tau, config.restructure_margin))
        q_chi2 = model_accuracy(spec, model).q_overall
        rows.append(CsvRow(run=run, t=config.steps, model_nodes=model.node_count(), q_chi2=q_chi2,
                           seed=config.seed + run, tau=config.tau, n=n))
        logger.debug(f"Replica {run}, n={n}: Q_chi2 {q_chi2:.4f}")
    return rows


PROTOCOLS = {
    'online': run_online,
    'tau-sweep': run_tau_sweep,
    'generalization': run_generalization,
}


def run_replica(config: ExperimentConfig, run: int) -> List[CsvRow]:
    """Rows of one replica; a failure becomes a single error row"""
    try:
        return PROTOCOLS[config.mode](config, run)
    except Exception as e:
        logger.error(f"Replica {run} failed: {e}", exc_info=True)
        return [CsvRow(run=run, seed=config.seed + run, error=f"{type(e).__name__}: {e}")]


def run_experiment(config: ExperimentConfig) -> List[CsvRow]:
    config.validate()
    logger.debug(f"=== EXPERIMENT START ({config.mode}, {config.agent}, {config.runs} runs) ===")
    runs = range(config.runs)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_replica, [config] * config.runs, runs))
    else:
        results = [run_replica(config, run) for run in runs]
    rows = [row for replica in results for row in replica]
    if config.out:
        write_csv(rows, config.out)
    logger.debug("=== EXPERIMENT END ===")
    return rows


def solution_to_dict(spec: ProblemSpec, value: ValueTree, policy: PolicyTree) -> Dict[str, Any]:
    names = list(spec.variable_names)
    return {
        'schema_version': SCHEMA_VERSION,
        'problem': spec.name,
        'variables': names,
        'actions': list(spec.actions),
        'value': tree_to_dict(value, names, encode=float),
        'policy': tree_to_dict(policy_to_labels(policy, spec.actions), names),
    }


def solve_offline(spec: ProblemSpec, config: Optional[PlannerConfig] = None,
                  out: Optional[Union[str, Path]] = None) -> Tuple[ValueTree, PolicyTree, Dict[str, Any]]:
    """V*, pi* and their dump; written to out when given"""
    value, policy = svi_solve(spec, config)
    dump = solution_to_dict(spec, value, policy)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(dump, f, indent=2)
        logger.info(f"Wrote value and policy trees to {path}")
    return value, policy, dump


def load_solution(path: Union[str, Path], spec: ProblemSpec) -> Tuple[ValueTree, PolicyTree]:
    """Reload a dump written by solve_offline against the problem it was solved on"""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(e.msg, path=str(path), line=e.lineno) from e
    if not isinstance(data, dict) or data.get('schema_version') != SCHEMA_VERSION:
        raise ProblemFormatError("missing or unsupported schema_version", path=str(path),
                                 field='schema_version')
    names = list(spec.variable_names)
    if data.get('variables') != names or data.get('actions') != list(spec.actions):
        raise ProblemFormatError(f"dump does not match problem {spec.name}", path=str(path))
    sizes = list(spec.domain.sizes)
    action_ids = {name: a for a, name in enumerate(spec.actions)}

    def decode_action(raw, where):
        if raw not in action_ids:
            raise ProblemFormatError(f"unknown action '{raw}'", path=str(path), field=where)
        return action_ids[raw]

    try:
        value = tree_from_dict(data.get('value'), names, sizes, decode=lambda raw, where: float(raw),
                               field='value')
        policy = tree_from_dict(data.get('policy'), names, sizes, decode=decode_action, field='policy')
    except (TypeError, ValueError) as e:
        raise ProblemFormatError(str(e), path=str(path)) from e
    return value, policy
