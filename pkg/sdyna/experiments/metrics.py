#!/usr/bin/env python3
"""Evaluation criteria: relative value error, model accuracy and discounted reward"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from sdyna.fmdp.model import LearnedModel, ProblemSpec
from sdyna.planning.planner import PlannerConfig, PolicyTree, ValueTree, ssa_evaluate
from sdyna.stats.chi_square import chi2_tail_q, two_distribution_chi2
from sdyna.trees.decision_tree import NUMERIC_TOLERANCE, DomainSpec, leaf_regions, merge
from sdyna.utils.errors import DomainError, MetricConsistencyError

logger = logging.getLogger(__name__)

CONSISTENCY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class RelativeErrorReport:
    xi: float
    breakdown: Tuple[Tuple[float, int], ...] = ()


@dataclass(frozen=True)
class AccuracyReport:
    q_overall: float
    sigmas: Dict[Tuple[int, int], float] = field(default_factory=dict)


def value_gap(v_star: float, v_pi: float) -> float:
    """(V* - V_pi) / V* for one region"""
    if v_pi > v_star + CONSISTENCY_TOLERANCE:
        raise MetricConsistencyError(f"policy value {v_pi} exceeds optimal value {v_star}")
    if v_pi >= v_star:
        return 0.0
    if abs(v_star) <= NUMERIC_TOLERANCE:
        return 0.0 if abs(v_pi) <= NUMERIC_TOLERANCE else 1.0
    return (v_star - v_pi) / v_star


def relative_error(v_star: ValueTree, v_pi: ValueTree, domain: DomainSpec) -> RelativeErrorReport:
    """Average relative value error, weighted by the size of each merged region"""
    gaps = merge([v_star, v_pi], lambda labels: value_gap(labels[0], labels[1]))
    breakdown = tuple((float(r.label), r.region_size) for r in leaf_regions(gaps, domain))
    xi = sum(gap * size for gap, size in breakdown) / domain.n_states
    return RelativeErrorReport(xi, breakdown)


def policy_error(true_spec: ProblemSpec, policy: PolicyTree, v_star: ValueTree,
                 config: Optional[PlannerConfig] = None) -> RelativeErrorReport:
    """Relative error of policy, its value computed with SSA on the true problem"""
    v_pi = ssa_evaluate(policy, true_spec, config)
    return relative_error(v_star, v_pi, true_spec.domain)


def open_state_count(spec: ProblemSpec) -> int:
    """Number of non-terminal states, counted on the regions of the terminal tree"""
    return sum(r.region_size for r in leaf_regions(spec.terminal, spec.domain) if not r.label)


def sigma_accuracy(true_spec: ProblemSpec, learned_spec: ProblemSpec, action: int, var: int,
                   dof: int = 1) -> float:
    """Sum over merged non-terminal regions of Q(chi2 | dof) * S_l for one CPD

    Terminal states have no transitions, so their regions score nothing.
    """
    def score(labels) -> float:
        true_dist, learned_dist, terminal = labels
        if terminal:
            return 0.0
        return chi2_tail_q(two_distribution_chi2(true_dist, learned_dist), dof)

    merged = merge([true_spec.cpd(action, var), learned_spec.cpd(action, var), true_spec.terminal], score)
    return float(sum(r.label * r.region_size for r in leaf_regions(merged, true_spec.domain)))


def model_accuracy(true_spec: ProblemSpec, learned: Union[LearnedModel, ProblemSpec],
                   dof: int = 1) -> AccuracyReport:
    """Sum of sigma over every (action, variable), normalized by |A| * n * |open states| into [0, 1]"""
    learned_spec = learned.to_spec() if isinstance(learned, LearnedModel) else learned
    if (learned_spec.variable_names != true_spec.variable_names
            or learned_spec.actions != true_spec.actions):
        raise DomainError("learned model and problem declare different variables or actions")
    open_states = open_state_count(true_spec)
    if open_states == 0:
        raise DomainError(f"{true_spec.name}: every state is terminal, no transitions to score")
    sigmas = {(a, i): sigma_accuracy(true_spec, learned_spec, a, i, dof)
              for a in range(true_spec.n_actions) for i in range(true_spec.n_vars)}
    q = sum(sigmas.values()) / (true_spec.n_actions * true_spec.n_vars * open_states)
    return AccuracyReport(q, sigmas)


def discounted_reward_update(prev: float, reward: float, gamma_report: float) -> float:
    return reward + gamma_report * prev


class RewardTrace:
    """Running discounted reward, one entry per step"""

    def __init__(self, gamma_report: float = 0.99):
        self.gamma_report = gamma_report
        self.current = 0.0
        self.entries: List[Tuple[int, float, float]] = []

    def update(self, t: int, reward: float) -> float:
        self.current = discounted_reward_update(self.current, reward, self.gamma_report)
        self.entries.append((t, reward, self.current))
        return self.current
