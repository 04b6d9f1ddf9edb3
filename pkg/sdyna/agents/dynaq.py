#!/usr/bin/env python3
"""Stochastic tabular DYNA-Q baseline"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from sdyna.agents.base import Agent
from sdyna.agents.exploration import ExplorationConfig, epsilon_greedy
from sdyna.agents.records import RunRecord
from sdyna.fmdp.environment import Environment, Transition
from sdyna.fmdp.ground import ENUMERATION_CAP
from sdyna.fmdp.model import ProblemSpec
from sdyna.planning.planner import PolicyTree, greedy_action
from sdyna.trees.decision_tree import DecisionTree, DomainSpec, Leaf, State, make_node
from sdyna.utils.errors import InfeasibleEnumerationError

logger = logging.getLogger(__name__)

Pair = Tuple[State, int]


@dataclass
class DynaQConfig:
    alpha: float = 1.0
    planning_multiplier: int = 2
    expected_updates: bool = True
    q_init: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1] (got {self.alpha})")
        if self.planning_multiplier < 0:
            raise ValueError("planning_multiplier must be >= 0")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DynaQConfig':
        known_fields = {f.name for f in cls.__dataclass_fields__.values()}
        return cls(**{k: v for k, v in data.items() if k in known_fields})


class EmpiricalModel:
    """Visit counts, successor counts and mean reward per observed (s, a)

    Pairs observed from terminal states hold a reward only.
    """

    def __init__(self):
        self.visits: Dict[Pair, int] = {}
        self.reward_sums: Dict[Pair, float] = {}
        self.successors: Dict[Pair, Dict[State, int]] = {}
        self.entries: List[Pair] = []

    def record(self, state: State, action: int, reward: float, next_state: Optional[State]):
        pair = (state, action)
        if pair not in self.visits:
            self.visits[pair] = 0
            self.reward_sums[pair] = 0.0
            self.entries.append(pair)
        self.visits[pair] += 1
        self.reward_sums[pair] += reward
        if next_state is not None:
            counts = self.successors.setdefault(pair, {})
            counts[next_state] = counts.get(next_state, 0) + 1

    def mean_reward(self, pair: Pair) -> float:
        return self.reward_sums[pair] / self.visits[pair]

    def node_count(self) -> int:
        """Number of (s, a) pairs with stored transitions"""
        return len(self.successors)


class DynaQAgent(Agent):
    kind = 'dynaq'

    def __init__(self, spec: ProblemSpec, config: Optional[DynaQConfig] = None,
                 exploration: Optional[ExplorationConfig] = None,
                 rng: Optional[np.random.Generator] = None):
        super().__init__(spec, exploration, rng)
        self.config = config or DynaQConfig()
        gamma = self.exploration.gamma
        if self.config.q_init is not None:
            self.q_init = float(self.config.q_init)
        else:
            self.q_init = spec.max_reward() / (1.0 - gamma)
        self.q: Dict[State, np.ndarray] = {}
        self.model = EmpiricalModel()
        self.updates = 0

    def q_values(self, state: State) -> np.ndarray:
        values = self.q.get(state)
        if values is None:
            return np.full(self.spec.n_actions, self.q_init)
        return values

    def _target(self, pair: Pair) -> float:
        reward = self.model.mean_reward(pair)
        counts = self.model.successors.get(pair)
        if not counts:
            return reward
        gamma = self.exploration.gamma
        if self.config.expected_updates:
            total = sum(counts.values())
            future = sum(n * float(self.q_values(s).max()) for s, n in counts.items()) / total
        else:
            states = list(counts)
            weights = np.array([counts[s] for s in states], dtype=float)
            pick = self.rng.choice(len(states), p=weights / weights.sum())
            future = float(self.q_values(states[pick]).max())
        return reward + gamma * future

    def update(self, pair: Pair):
        state, action = pair
        if state not in self.q:
            self.q[state] = np.full(self.spec.n_actions, self.q_init)
        q = self.q[state]
        q[action] += self.config.alpha * (self._target(pair) - q[action])
        self.updates += 1

    def act(self, state: State) -> int:
        return epsilon_greedy(self.q_values(state), self.exploration.epsilon, self.rng)

    def observe(self, transition: Transition):
        next_state = None if transition.terminal else transition.next_state
        self.model.record(transition.state, transition.action, transition.reward, next_state)
        self.update((transition.state, transition.action))
        for _ in range(self.config.planning_multiplier * self.model.node_count()):
            entries = self.model.entries
            self.update(entries[int(self.rng.integers(len(entries)))])

    def model_nodes(self) -> int:
        return self.model.node_count()

    def greedy_policy(self) -> PolicyTree:
        return tabular_policy_tree(self.q_values, self.spec.domain)


def dynaq_step(agent: DynaQAgent, env: Environment) -> RunRecord:
    return agent.step(env)


def tabular_policy_tree(q_values, domain: DomainSpec) -> PolicyTree:
    """Greedy action of every state, as a decision tree testing variables in order"""
    if domain.n_states > ENUMERATION_CAP:
        raise InfeasibleEnumerationError(f"{domain.n_states} states exceed {ENUMERATION_CAP}")

    def build(prefix: Tuple[int, ...]) -> DecisionTree:
        if len(prefix) == domain.n_vars:
            return Leaf(greedy_action(list(q_values(prefix))))
        var = len(prefix)
        return make_node(var, [build(prefix + (value,)) for value in range(domain.sizes[var])])

    return build(())
