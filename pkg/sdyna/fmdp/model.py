#!/usr/bin/env python3
"""Factored MDP definitions: ground-truth problems and learned models"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from sdyna.trees.decision_tree import (DecisionTree, DomainSpec, Leaf, Node, State,
                                       evaluate, leaves, map_leaves, restrict,
                                       tested_variables, validate_tree)
from sdyna.trees.induction import InductionConfig, LearnerTree
from sdyna.utils.errors import SimulationError, TreeStructureError, ValidationError

logger = logging.getLogger(__name__)

Distribution = Tuple[float, ...]

ACTION_ATTRIBUTE = 'action'
DISTRIBUTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Variable:
    name: str
    values: Tuple[str, ...] = ('false', 'true')

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple(self.values))

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Ground-truth FMDP

    transitions[a][i] is Tree(CPD^a_{X'_i}) with probability-tuple leaves; the
    reward tree tests the state variables plus the action attribute (index
    n_vars); terminal and initial trees carry boolean leaves.
    """
    name: str
    variables: Tuple[Variable, ...]
    actions: Tuple[str, ...]
    transitions: Tuple[Tuple[DecisionTree, ...], ...]
    reward: DecisionTree
    terminal: DecisionTree
    discount: float = 0.9
    initial: Optional[DecisionTree] = None
    r_max: Optional[float] = None
    _reward_cache: Dict[int, DecisionTree] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'variables', tuple(self.variables))
        object.__setattr__(self, 'actions', tuple(self.actions))
        object.__setattr__(self, 'transitions', tuple(tuple(row) for row in self.transitions))

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def domain(self) -> DomainSpec:
        return DomainSpec(tuple(v.size for v in self.variables))

    @property
    def reward_domain(self) -> DomainSpec:
        return self.domain.extended(self.n_actions)

    @property
    def variable_names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def attribute_names(self) -> Tuple[str, ...]:
        return self.variable_names + (ACTION_ATTRIBUTE,)

    def cpd(self, action: int, var: int) -> DecisionTree:
        return self.transitions[action][var]

    def reward_tree(self, action: int) -> DecisionTree:
        """Reward tree specialized to one action"""
        if action not in self._reward_cache:
            self._reward_cache[action] = restrict(self.reward, self.n_vars, action)
        return self._reward_cache[action]

    def max_reward(self) -> float:
        if self.r_max is not None:
            return float(self.r_max)
        return float(max(leaves(self.reward)))

    def replace(self, **changes) -> 'ProblemSpec':
        changes.setdefault('_reward_cache', {})
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DbnGraph:
    """Parents_a(X'_i) for every action a and variable i"""
    parents: Dict[Tuple[int, int], FrozenSet[int]]

    def of(self, action: int, var: int) -> FrozenSet[int]:
        return self.parents[(action, var)]


def persistence_tree(var: int, size: int) -> DecisionTree:
    """CPD keeping a variable at its current value"""
    return Node(var, tuple(
        Leaf(tuple(1.0 if k == value else 0.0 for k in range(size))) for value in range(size)))


def validate_spec(spec: ProblemSpec) -> ProblemSpec:
    """Raise ValidationError listing every violated invariant"""
    problems: List[str] = []
    domain = spec.domain
    if spec.n_vars == 0:
        problems.append("problem declares no variables")
    if spec.n_actions == 0:
        problems.append("problem declares no actions")
    for var in spec.variables:
        if var.size < 2:
            problems.append(f"variable '{var.name}' needs at least 2 values")
    if not 0.0 <= spec.discount < 1.0:
        problems.append(f"discount {spec.discount} outside [0, 1)")
    if len(spec.transitions) != spec.n_actions:
        problems.append(f"{len(spec.transitions)} transition rows for {spec.n_actions} actions")
    if problems:
        raise ValidationError(problems)

    for a, row in enumerate(spec.transitions):
        action = spec.actions[a]
        if len(row) != spec.n_vars:
            problems.append(f"action '{action}' has {len(row)} CPD trees for {spec.n_vars} variables")
            continue
        for i, tree in enumerate(row):
            var = spec.variables[i]
            where = f"CPD (action '{action}', variable '{var.name}')"
            try:
                validate_tree(tree, domain)
            except TreeStructureError as e:
                problems.append(f"{where}: {e}")
                continue
            for dist in leaves(tree):
                if not isinstance(dist, tuple) or len(dist) != var.size:
                    problems.append(f"{where}: leaf {dist!r} is not a distribution over {var.size} values")
                    break
                if any(p < 0 for p in dist) or abs(sum(dist) - 1.0) > DISTRIBUTION_TOLERANCE:
                    problems.append(f"{where}: leaf {dist!r} sums to {sum(dist):.6g}, not 1")
                    break

    checks = [('reward', spec.reward, spec.reward_domain, 'number'),
              ('terminal', spec.terminal, domain, 'bool')]
    if spec.initial is not None:
        checks.append(('initial', spec.initial, domain, 'bool'))
    for name, tree, tree_domain, kind in checks:
        try:
            validate_tree(tree, tree_domain)
        except TreeStructureError as e:
            problems.append(f"{name} tree: {e}")
            continue
        for label in leaves(tree):
            if kind == 'bool' and not isinstance(label, bool):
                problems.append(f"{name} tree: leaf {label!r} is not boolean")
                break
            if kind == 'number' and (isinstance(label, bool) or not isinstance(label, (int, float))
                                     or not math.isfinite(label)):
                problems.append(f"{name} tree: leaf {label!r} is not a finite number")
                break
    if problems:
        raise ValidationError(problems)
    return spec


def true_reward(spec: ProblemSpec, state: Sequence[int], action: int) -> float:
    return float(evaluate(spec.reward, tuple(state) + (action,)))


def is_terminal(spec: ProblemSpec, state: Sequence[int]) -> bool:
    return bool(evaluate(spec.terminal, state))


def next_state_marginals(spec: ProblemSpec, state: Sequence[int], action: int) -> List[Distribution]:
    return [evaluate(spec.cpd(action, i), state) for i in range(spec.n_vars)]


def sample_transition(spec: ProblemSpec, state: Sequence[int], action: int,
                      rng: np.random.Generator) -> State:
    """Draw each X'_i independently from its CPD at state"""
    if is_terminal(spec, state):
        raise SimulationError(f"state {tuple(state)} is terminal and has no transitions")
    draws = rng.random(spec.n_vars)
    next_state = []
    for dist, u in zip(next_state_marginals(spec, state, action), draws):
        value = len(dist) - 1
        acc = 0.0
        for k, p in enumerate(dist):
            acc += p
            if u < acc:
                value = k
                break
        next_state.append(value)
    return tuple(next_state)


class LearnedModel:
    """M_t: one learner per (action, variable) CPD plus one reward learner

    CPD learners use the state variables as attributes; the reward learner
    adds the action as a final attribute.
    """

    def __init__(self, variables: Sequence[Variable], actions: Sequence[str], terminal: DecisionTree,
                 config: Optional[InductionConfig] = None, discount: float = 0.9,
                 name: str = 'learned'):
        self.variables = tuple(variables)
        self.actions = tuple(actions)
        self.terminal = terminal
        self.config = config or InductionConfig()
        self.discount = discount
        self.name = name
        sizes = [v.size for v in self.variables]
        self.transition_learners: List[List[LearnerTree]] = [
            [LearnerTree(sizes, class_values=range(var.size), config=self.config) for var in self.variables]
            for _ in self.actions
        ]
        self.reward_learner = LearnerTree(sizes + [len(self.actions)], class_values=None, config=self.config)
        self._cpd_cache: Dict[Tuple[int, int], Tuple[DecisionTree, DecisionTree]] = {}
        self._reward_snapshot: Optional[Tuple[DecisionTree, DecisionTree]] = None

    @classmethod
    def for_problem(cls, spec: ProblemSpec, config: Optional[InductionConfig] = None) -> 'LearnedModel':
        """Empty model over the public description of spec (variables, actions, terminal condition)"""
        return cls(spec.variables, spec.actions, spec.terminal, config=config,
                   discount=spec.discount, name=f"{spec.name}-learned")

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def learner(self, action: int, var: int) -> LearnerTree:
        return self.transition_learners[action][var]

    def observe_reward(self, state: Sequence[int], action: int, reward: float):
        self.reward_learner.add_example(tuple(state) + (action,), float(reward))

    def observe_transition(self, state: Sequence[int], action: int, next_state: Sequence[int]):
        for i, learner in enumerate(self.transition_learners[action]):
            learner.add_example(state, next_state[i])

    def add_trajectory(self, transitions: Sequence) -> 'LearnedModel':
        """Batch-ingest (state, action, reward, next_state, terminal) records"""
        rewards = []
        per_learner: Dict[Tuple[int, int], list] = {}
        for state, action, reward, next_state, terminal in transitions:
            rewards.append((tuple(state) + (action,), float(reward)))
            if terminal:
                continue
            for i in range(self.n_vars):
                per_learner.setdefault((action, i), []).append((state, next_state[i]))
        self.reward_learner.add_examples(rewards)
        for (action, i), examples in per_learner.items():
            self.transition_learners[action][i].add_examples(examples)
        return self

    def node_count(self) -> int:
        """Size of the transition model: nodes across all CPD trees"""
        return sum(learner.node_count() for row in self.transition_learners for learner in row)

    def to_spec(self) -> ProblemSpec:
        transitions = []
        for a, row in enumerate(self.transition_learners):
            trees = []
            for i, learner in enumerate(row):
                frozen = learner.freeze()
                cached = self._cpd_cache.get((a, i))
                if cached is None or cached[0] is not frozen:
                    cached = (frozen, map_leaves(frozen, lambda d: d.probabilities))
                    self._cpd_cache[(a, i)] = cached
                trees.append(cached[1])
            transitions.append(tuple(trees))
        frozen = self.reward_learner.freeze()
        if self._reward_snapshot is None or self._reward_snapshot[0] is not frozen:
            self._reward_snapshot = (frozen, map_leaves(frozen, lambda d: d.expected_value()))
        return ProblemSpec(
            name=self.name,
            variables=self.variables,
            actions=self.actions,
            transitions=tuple(transitions),
            reward=self._reward_snapshot[1],
            terminal=self.terminal,
            discount=self.discount,
        )


def model_to_spec(model: LearnedModel) -> ProblemSpec:
    """Freeze every learner; CPD leaves become probabilities, reward leaves expected values"""
    return model.to_spec()


def extract_parents(source: Union[LearnedModel, ProblemSpec]) -> DbnGraph:
    """Parents_a(X'_i) = variables tested in Tree(CPD^a_{X'_i})"""
    parents = {}
    if isinstance(source, LearnedModel):
        for a, row in enumerate(source.transition_learners):
            for i, learner in enumerate(row):
                parents[(a, i)] = learner.tested_attributes()
    else:
        for a, row in enumerate(source.transitions):
            for i, tree in enumerate(row):
                parents[(a, i)] = tested_variables(tree)
    return DbnGraph(parents)
