#!/usr/bin/env python3
"""Structured dynamic programming over decision trees

Value functions, action-value functions and policies are all DecisionTrees.
One Bellman backup regresses the current value tree through each action's
CPD trees and merges the resulting Q trees with max.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

from sdyna.fmdp.model import ProblemSpec
from sdyna.trees.decision_tree import (NUMERIC_TOLERANCE, DecisionTree, Leaf, map_leaves,
                                       leaves, merge, node_count, tested_variables)
from sdyna.utils.errors import ConvergenceError

logger = logging.getLogger(__name__)

ValueTree = DecisionTree
PolicyTree = DecisionTree
QTreeSet = Tuple[DecisionTree, ...]

ZERO_VALUE: ValueTree = Leaf(0.0)


@dataclass
class PlannerConfig:
    """Discount and stopping rules for SVI and SSA"""
    gamma: float = 0.9
    span_tolerance: float = 1e-5
    sup_tolerance: float = 1e-6
    max_iterations: int = 10000
    backups_per_step: int = 1

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1) (got {self.gamma})")
        if self.span_tolerance <= 0 or self.sup_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1 or self.backups_per_step < 1:
            raise ValueError("max_iterations and backups_per_step must be >= 1")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PlannerConfig':
        known_fields = {f.name for f in cls.__dataclass_fields__.values()}
        return cls(**{k: v for k, v in data.items() if k in known_fields})


def expected_value(v: ValueTree, marginals: Dict[int, Sequence[float]]) -> float:
    """E[V(s')] when each tested X'_j is distributed by marginals[j], independently"""
    if isinstance(v, Leaf):
        return float(v.label)
    total = 0.0
    for value, p in enumerate(marginals[v.var]):
        if p > 0.0:
            total += p * expected_value(v.children[value], marginals)
    return total


def regress(v: ValueTree, spec: ProblemSpec, action: int, gamma: float) -> DecisionTree:
    """Q_a = R_a + gamma * E[V(s')] in one merge; terminal regions keep R_a only"""
    parents = sorted(tested_variables(v))
    k = len(parents)
    trees = [spec.cpd(action, j) for j in parents] + [spec.reward_tree(action), spec.terminal]

    def combine(labels):
        reward = float(labels[k])
        if labels[k + 1]:
            return reward
        return reward + gamma * expected_value(v, dict(zip(parents, labels[:k])))

    return merge(trees, combine)


def plan_step(spec: ProblemSpec, v_prev: ValueTree, gamma: float,
              backups: int = 1) -> Tuple[QTreeSet, ValueTree]:
    """One (or `backups`) structured Bellman backups: regress every action, merge with max"""
    v = v_prev
    qs: QTreeSet = ()
    for _ in range(backups):
        qs = tuple(regress(v, spec, a, gamma) for a in range(spec.n_actions))
        v = merge(qs, lambda labels: max(labels))
    return qs, v


def greedy_action(values: Sequence[float]) -> int:
    """Argmax with values within 1e-12 of the best tied; the lowest index wins"""
    best = max(values)
    for a, q in enumerate(values):
        if q >= best - NUMERIC_TOLERANCE:
            return a
    return 0


def greedy_policy(qs: QTreeSet) -> PolicyTree:
    return merge(qs, greedy_action)


def difference_tree(v1: ValueTree, v2: ValueTree) -> DecisionTree:
    return merge([v1, v2], lambda labels: labels[0] - labels[1])


def span(tree: DecisionTree) -> float:
    """max - min over the leaves"""
    values = list(leaves(tree))
    return float(max(values) - min(values))


def sup_distance(v1: ValueTree, v2: ValueTree) -> float:
    return float(max(abs(d) for d in leaves(difference_tree(v1, v2))))


def svi_solve(spec: ProblemSpec, config: Optional[PlannerConfig] = None,
              v0: ValueTree = ZERO_VALUE) -> Tuple[ValueTree, PolicyTree]:
    """Optimal value and policy trees

    Backups stop when the span of successive differences drops below
    span_tolerance; the greedy policy is then evaluated with SSA so the
    returned value is that of the returned policy.
    """
    config = config or PlannerConfig(gamma=spec.discount)
    logger.debug(f"=== SVI START ({spec.name}, gamma={config.gamma}) ===")
    v = v0
    delta = float('inf')
    for iteration in range(1, config.max_iterations + 1):
        qs, v_next = plan_step(spec, v, config.gamma)
        delta = span(difference_tree(v_next, v))
        v = v_next
        logger.debug(f"SVI iteration {iteration}: span {delta:.3e}, value tree {node_count(v)} nodes")
        if delta <= config.span_tolerance:
            break
    else:
        raise ConvergenceError(f"SVI on {spec.name} did not converge", delta, config.max_iterations)
    policy = greedy_policy(qs)
    value = ssa_evaluate(policy, spec, config, v0=v)
    logger.debug("=== SVI END ===")
    logger.info(f"SVI on {spec.name} converged after {iteration} iterations "
                f"(value tree {node_count(value)} nodes, policy tree {node_count(policy)} nodes)")
    return value, policy


def policy_actions(policy: PolicyTree) -> frozenset:
    return frozenset(leaves(policy))


def ssa_evaluate(policy: PolicyTree, spec: ProblemSpec, config: Optional[PlannerConfig] = None,
                 v0: ValueTree = ZERO_VALUE) -> ValueTree:
    """V_pi by structured successive approximation, stopping on the sup norm"""
    config = config or PlannerConfig(gamma=spec.discount)
    used = policy_actions(policy)
    v = v0
    delta = float('inf')
    for iteration in range(1, config.max_iterations + 1):
        qs = [regress(v, spec, a, config.gamma) if a in used else ZERO_VALUE
              for a in range(spec.n_actions)]
        v_next = merge([policy] + qs, lambda labels: labels[1 + labels[0]])
        delta = sup_distance(v_next, v)
        v = v_next
        if delta <= config.sup_tolerance:
            logger.debug(f"SSA converged after {iteration} iterations (sup {delta:.3e})")
            return v
    raise ConvergenceError("SSA policy evaluation did not converge", delta, config.max_iterations)


def policy_to_labels(policy: PolicyTree, actions: Sequence[str]) -> DecisionTree:
    """Replace action ids by action names"""
    return map_leaves(policy, lambda a: actions[a], collapse=False)
