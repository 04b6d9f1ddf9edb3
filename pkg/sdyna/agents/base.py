#!/usr/bin/env python3
"""Shared agent loop: act, execute, observe, report"""

import logging
from typing import Optional

import numpy as np

from sdyna.agents.exploration import ExplorationConfig
from sdyna.agents.records import RunRecord
from sdyna.experiments.metrics import RewardTrace
from sdyna.fmdp.environment import Environment, Transition
from sdyna.fmdp.model import ProblemSpec
from sdyna.planning.planner import PolicyTree
from sdyna.trees.decision_tree import State

logger = logging.getLogger(__name__)


class Agent:
    """One control loop step per call to step()

    Subclasses choose actions in act() and learn in observe().
    """
    kind = 'agent'

    def __init__(self, spec: ProblemSpec, exploration: Optional[ExplorationConfig] = None,
                 rng: Optional[np.random.Generator] = None):
        self.spec = spec
        self.exploration = exploration or ExplorationConfig()
        self.rng = rng if rng is not None else np.random.default_rng(self.exploration.seed)
        self.trace = RewardTrace(self.exploration.gamma_report)
        self.t = 0

    def act(self, state: State) -> int:
        raise NotImplementedError

    def observe(self, transition: Transition):
        pass

    def model_nodes(self) -> int:
        return 0

    def greedy_policy(self) -> PolicyTree:
        """Policy the agent would follow without exploration"""
        raise NotImplementedError

    def step(self, env: Environment) -> RunRecord:
        state = env.state
        action = self.act(state)
        transition = env.step(action)
        self.observe(transition)
        r_disc = self.trace.update(self.t, transition.reward)
        record = RunRecord(self.t, state, action, transition.reward, r_disc,
                           self.model_nodes(), transition.terminal)
        self.t += 1
        return record
