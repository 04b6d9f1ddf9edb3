#!/usr/bin/env python3
"""Reference agents: uniform random actions and the offline-optimal policy"""

import logging
from typing import Optional

import numpy as np

from sdyna.agents.base import Agent
from sdyna.agents.exploration import ExplorationConfig
from sdyna.agents.records import RunRecord
from sdyna.fmdp.environment import Environment
from sdyna.fmdp.model import ProblemSpec
from sdyna.planning.planner import PlannerConfig, PolicyTree, svi_solve
from sdyna.trees.decision_tree import Leaf, State, evaluate

logger = logging.getLogger(__name__)


class RandomAgent(Agent):
    kind = 'random'

    def act(self, state: State) -> int:
        return int(self.rng.integers(self.spec.n_actions))

    def greedy_policy(self) -> PolicyTree:
        return Leaf(0)


class OptimalAgent(Agent):
    """Follows pi* computed offline on the true problem"""
    kind = 'optimal'

    def __init__(self, spec: ProblemSpec, policy: Optional[PolicyTree] = None,
                 planner: Optional[PlannerConfig] = None,
                 exploration: Optional[ExplorationConfig] = None,
                 rng: Optional[np.random.Generator] = None):
        super().__init__(spec, exploration, rng)
        if policy is None:
            _, policy = svi_solve(spec, planner or PlannerConfig(gamma=self.exploration.gamma))
        self.policy = policy

    def act(self, state: State) -> int:
        return int(evaluate(self.policy, state))

    def greedy_policy(self) -> PolicyTree:
        return self.policy


def random_agent_step(agent: RandomAgent, env: Environment) -> RunRecord:
    return agent.step(env)


def optimal_agent_step(agent: OptimalAgent, env: Environment) -> RunRecord:
    return agent.step(env)
