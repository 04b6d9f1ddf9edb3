#!/usr/bin/env python3
"""Problem files, bundled problems and the generated benchmark families"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

from sdyna.fmdp.model import (ACTION_ATTRIBUTE, Distribution, ProblemSpec, Variable,
                              persistence_tree, validate_spec)
from sdyna.trees.decision_tree import (DecisionTree, Leaf, make_node, map_leaves,
                                       tree_from_dict, tree_to_dict)
from sdyna.utils.errors import DomainError, ProblemFormatError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DATA_DIR = Path(__file__).parent / 'data'

BUNDLED = {
    'coffee': 'coffee_robot.json',
    'process': 'process_planning.json',
}

TRUE = (0.0, 1.0)
FALSE = (1.0, 0.0)


def _decode_distribution(size: int) -> Callable[[Any, str], Distribution]:
    def decode(raw: Any, where: str) -> Distribution:
        if not isinstance(raw, list) or len(raw) != size:
            raise ProblemFormatError(f"CPD leaf must list {size} probabilities", field=where)
        if not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in raw):
            raise ProblemFormatError("CPD leaf probabilities must be numbers", field=where)
        return tuple(float(p) for p in raw)
    return decode


def _decode_number(raw: Any, where: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ProblemFormatError("reward leaf must be a number", field=where)
    return float(raw)


def _decode_bool(raw: Any, where: str) -> bool:
    if not isinstance(raw, bool):
        raise ProblemFormatError("leaf must be true or false", field=where)
    return raw


def _require(data: Dict[str, Any], key: str, kind: type, path: Optional[str]) -> Any:
    if key not in data:
        raise ProblemFormatError("missing field", path=path, field=key)
    if not isinstance(data[key], kind):
        raise ProblemFormatError(f"expected {kind.__name__}", path=path, field=key)
    return data[key]


def parse_problem(data: Any, path: Optional[str] = None) -> ProblemSpec:
    """Build and validate a ProblemSpec from the decoded JSON document"""
    if not isinstance(data, dict):
        raise ProblemFormatError("problem file must hold an object", path=path)
    version = _require(data, 'schema_version', int, path)
    if version != SCHEMA_VERSION:
        raise ProblemFormatError(f"unsupported schema version {version}", path=path, field='schema_version')

    variables = []
    for k, entry in enumerate(_require(data, 'variables', list, path)):
        if not isinstance(entry, dict) or 'name' not in entry:
            raise ProblemFormatError("variable needs a name", path=path, field=f"variables[{k}]")
        values = entry.get('values', ['false', 'true'])
        if not isinstance(values, list) or len(values) < 2:
            raise ProblemFormatError("values must be a list of at least two names", path=path,
                                     field=f"variables[{k}].values")
        variables.append(Variable(str(entry['name']), tuple(str(v) for v in values)))
    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        raise ProblemFormatError("duplicate variable names", path=path, field='variables')
    sizes = [v.size for v in variables]

    actions = [str(a) for a in _require(data, 'actions', list, path)]
    if len(set(actions)) != len(actions):
        raise ProblemFormatError("duplicate action names", path=path, field='actions')

    declared = data.get('transitions', {})
    if not isinstance(declared, dict):
        raise ProblemFormatError("expected an object", path=path, field='transitions')
    unknown = set(declared) - set(actions)
    if unknown:
        raise ProblemFormatError(f"transitions for unknown actions {sorted(unknown)}", path=path,
                                 field='transitions')

    try:
        transitions = []
        for action in actions:
            per_variable = declared.get(action, {})
            if not isinstance(per_variable, dict):
                raise ProblemFormatError("expected an object", field=f"transitions.{action}")
            stray = set(per_variable) - set(names)
            if stray:
                raise ProblemFormatError(f"unknown variables {sorted(stray)}",
                                         field=f"transitions.{action}")
            row = []
            for i, var in enumerate(variables):
                if var.name in per_variable:
                    row.append(tree_from_dict(per_variable[var.name], names, sizes,
                                              decode=_decode_distribution(var.size),
                                              field=f"transitions.{action}.{var.name}"))
                else:
                    row.append(persistence_tree(i, var.size))
            transitions.append(tuple(row))

        reward = tree_from_dict(_require(data, 'reward', dict, path), names + [ACTION_ATTRIBUTE],
                                sizes + [len(actions)], decode=_decode_number, field='reward')
        terminal = tree_from_dict(_require(data, 'terminal', dict, path), names, sizes,
                                  decode=_decode_bool, field='terminal')
        initial = None
        if data.get('initial') is not None:
            initial = tree_from_dict(data['initial'], names, sizes, decode=_decode_bool, field='initial')
    except ProblemFormatError as e:
        if e.path is None and path is not None:
            raise ProblemFormatError(str(e), path=path) from e
        raise

    spec = ProblemSpec(
        name=str(data.get('name', Path(path).stem if path else 'problem')),
        variables=tuple(variables),
        actions=tuple(actions),
        transitions=tuple(transitions),
        reward=reward,
        terminal=terminal,
        discount=float(data.get('discount', 0.9)),
        initial=initial,
        r_max=float(data['r_max']) if data.get('r_max') is not None else None,
    )
    return validate_spec(spec)


def load_problem(path: Union[str, Path]) -> ProblemSpec:
    """Read a problem file; parse errors carry the line, validation errors name the tree"""
    path = Path(path)
    logger.debug(f"Loading problem file {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(e.msg, path=str(path), line=e.lineno) from e
    spec = parse_problem(data, path=str(path))
    logger.info(f"Loaded problem {spec.name}: {spec.n_vars} variables, {spec.n_actions} actions")
    return spec


def problem_to_dict(spec: ProblemSpec) -> Dict[str, Any]:
    """Problem-file document; CPDs equal to persistence are omitted"""
    names = list(spec.variable_names)
    transitions: Dict[str, Dict[str, Any]] = {}
    for a, action in enumerate(spec.actions):
        entries = {}
        for i, var in enumerate(spec.variables):
            tree = spec.cpd(a, i)
            if tree == persistence_tree(i, var.size):
                continue
            entries[var.name] = tree_to_dict(tree, names, encode=list)
        transitions[action] = entries
    data = {
        'schema_version': SCHEMA_VERSION,
        'name': spec.name,
        'discount': spec.discount,
        'variables': [{'name': v.name, 'values': list(v.values)} for v in spec.variables],
        'actions': list(spec.actions),
        'transitions': transitions,
        'reward': tree_to_dict(spec.reward, list(spec.attribute_names)),
        'terminal': tree_to_dict(spec.terminal, names),
    }
    if spec.r_max is not None:
        data['r_max'] = spec.r_max
    if spec.initial is not None:
        data['initial'] = tree_to_dict(spec.initial, names)
    return data


def save_problem(spec: ProblemSpec, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(problem_to_dict(spec), f, indent=2)
    return path


def load_bundled(name: str) -> ProblemSpec:
    if name not in BUNDLED:
        raise ProblemFormatError(f"no bundled problem '{name}' (have {', '.join(sorted(BUNDLED))})")
    return load_problem(DATA_DIR / BUNDLED[name])


def _chain(order: Sequence[int], decide: Callable[[Dict[int, int]], Any]) -> DecisionTree:
    """Tree testing variables in order until decide(assignment) returns a label

    decide returns None while the label still depends on untested variables.
    """
    def build(depth: int, fixed: Dict[int, int]) -> DecisionTree:
        label = decide(fixed)
        if label is not None:
            return Leaf(label)
        if depth == len(order):
            raise DomainError(f"no label decided after testing {list(order)}")
        var = order[depth]
        children = []
        for value in (0, 1):
            fixed[var] = value
            children.append(build(depth + 1, fixed))
        del fixed[var]
        return make_node(var, children)

    return build(0, {})


def _all_true(fixed: Dict[int, int], variables: Sequence[int]) -> Optional[bool]:
    if any(fixed.get(v) == 0 for v in variables):
        return False
    if all(fixed.get(v) == 1 for v in variables):
        return True
    return None


def _binary_variables(n: int) -> List[Variable]:
    return [Variable(f"x{k + 1}") for k in range(n)]


def _set_when_enabled(k: int) -> DecisionTree:
    """X_k' true if X_k already true or X_1..X_{k-1} all true; else stays false"""
    prefix = list(range(k))

    def decide(fixed):
        if fixed.get(k) == 1:
            return TRUE
        if k not in fixed:
            return None
        enabled = _all_true(fixed, prefix)
        return None if enabled is None else (TRUE if enabled else FALSE)

    return _chain([k] + prefix, decide)


def _goal_trees(n: int, all_variables: bool):
    goal = list(range(n)) if all_variables else [n - 1]
    reward = _chain(goal, lambda f: None if _all_true(f, goal) is None else float(_all_true(f, goal)))
    terminal = _chain(goal, lambda f: _all_true(f, goal))
    initial = _chain(goal, lambda f: None if _all_true(f, goal) is None else not _all_true(f, goal))
    return reward, terminal, initial


def gen_linear(n: int, discount: float = 0.9) -> ProblemSpec:
    """Action a_k sets X_k once X_1..X_{k-1} are all true; reward and termination on X_n"""
    if n < 2:
        raise DomainError(f"Linear needs n >= 2 (got {n})")
    transitions = []
    for k in range(n):
        transitions.append(tuple(
            _set_when_enabled(k) if i == k else persistence_tree(i, 2) for i in range(n)))
    reward, terminal, initial = _goal_trees(n, all_variables=False)
    spec = ProblemSpec(
        name=f"linear{n}",
        variables=tuple(_binary_variables(n)),
        actions=tuple(f"a{k + 1}" for k in range(n)),
        transitions=tuple(transitions),
        reward=reward,
        terminal=terminal,
        discount=discount,
        initial=initial,
        r_max=1.0,
    )
    return validate_spec(spec)


def _clear_when_enabled(j: int, k: int) -> DecisionTree:
    """X_j' false when X_1..X_{k-1} are all true, else X_j persists (j < k)"""
    prefix = list(range(k))

    def decide(fixed):
        enabled = _all_true(fixed, prefix)
        if enabled:
            return FALSE
        if enabled is False and j in fixed:
            return TRUE if fixed[j] else FALSE
        return None

    order = [j] + [v for v in prefix if v != j]
    return _chain(order, decide)


def gen_expon(n: int, discount: float = 0.9) -> ProblemSpec:
    """Binary counter: a_k sets X_k and clears X_1..X_{k-1} once they are all true"""
    if n < 2:
        raise DomainError(f"Expon needs n >= 2 (got {n})")
    transitions = []
    for k in range(n):
        row = []
        for i in range(n):
            if i == k:
                row.append(_set_when_enabled(k))
            elif i < k:
                row.append(_clear_when_enabled(i, k))
            else:
                row.append(persistence_tree(i, 2))
        transitions.append(tuple(row))
    reward, terminal, initial = _goal_trees(n, all_variables=True)
    spec = ProblemSpec(
        name=f"expon{n}",
        variables=tuple(_binary_variables(n)),
        actions=tuple(f"a{k + 1}" for k in range(n)),
        transitions=tuple(transitions),
        reward=reward,
        terminal=terminal,
        discount=discount,
        initial=initial,
        r_max=1.0,
    )
    return validate_spec(spec)


def add_noise(spec: ProblemSpec, theta: float, name: Optional[str] = None) -> ProblemSpec:
    """Replace every binary CPD leaf probability p by p(1 - theta) + (1 - p) theta"""
    if not 0.0 <= theta < 0.5:
        raise DomainError(f"noise level must lie in [0, 0.5) (got {theta})")

    def blur(dist: Distribution) -> Distribution:
        p = dist[1] * (1.0 - theta) + dist[0] * theta
        return (1.0 - p, p)

    transitions = tuple(tuple(map_leaves(tree, blur) for tree in row) for row in spec.transitions)
    return validate_spec(spec.replace(transitions=transitions, name=name or spec.name))


def gen_noisy(n: int, theta: float = 0.2, discount: float = 0.9) -> ProblemSpec:
    """Linear(n) with a constant noise level theta on every transition"""
    if not 0.0 < theta < 0.5:
        raise DomainError(f"Noisy needs 0 < theta < 0.5 (got {theta})")
    return add_noise(gen_linear(n, discount), theta, name=f"noisy{n}_{theta:g}")


GENERATORS = {
    'linear': gen_linear,
    'expon': gen_expon,
    'noisy': gen_noisy,
}


def generate(family: str, n: int, theta: float = 0.2) -> ProblemSpec:
    if family not in GENERATORS:
        raise ProblemFormatError(f"unknown problem family '{family}'")
    if family == 'noisy':
        return gen_noisy(n, theta)
    return GENERATORS[family](n)


def resolve_problem(reference: str) -> ProblemSpec:
    """Problem from a file path or builtin:coffee|process|linear:N|expon:N|noisy:N:THETA"""
    if not reference.startswith('builtin:'):
        return load_problem(reference)
    parts = reference.split(':')[1:]
    kind = parts[0] if parts else ''
    try:
        if kind in BUNDLED and len(parts) == 1:
            return load_bundled(kind)
        if kind in ('linear', 'expon') and len(parts) == 2:
            return generate(kind, int(parts[1]))
        if kind == 'noisy' and len(parts) in (2, 3):
            theta = float(parts[2]) if len(parts) == 3 else 0.2
            if not math.isfinite(theta):
                raise ValueError(theta)
            return gen_noisy(int(parts[1]), theta)
    except ValueError as e:
        if isinstance(e, DomainError):
            raise
        raise ProblemFormatError(f"bad builtin parameters in '{reference}'") from e
    raise ProblemFormatError(f"unknown builtin problem '{reference}'")
