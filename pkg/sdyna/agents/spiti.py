#!/usr/bin/env python3
"""SDYNA instantiated with incremental decision trees (learning) and SVI (planning)

Each step the agent acts epsilon-greedily on its Q trees, observes the
transition, adds the reward and per-variable examples to the learned model,
then runs one structured backup on the frozen model.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from sdyna.agents.base import Agent
from sdyna.agents.exploration import ExplorationConfig, select_action
from sdyna.agents.records import RunRecord
from sdyna.fmdp.environment import Environment, Transition
from sdyna.fmdp.model import LearnedModel, ProblemSpec, model_to_spec
from sdyna.planning.planner import (ZERO_VALUE, PlannerConfig, PolicyTree, QTreeSet,
                                    ValueTree, greedy_policy, plan_step)
from sdyna.trees.decision_tree import State
from sdyna.trees.induction import InductionConfig

logger = logging.getLogger(__name__)


def spiti_learn(model: LearnedModel, state: Sequence[int], action: int, next_state: Sequence[int],
                reward: float, terminal: bool = False) -> LearnedModel:
    """Add the reward example and, unless state is terminal, one example per variable"""
    model.observe_reward(state, action, reward)
    if not terminal:
        model.observe_transition(state, action, next_state)
    return model


class SpitiAgent(Agent):
    kind = 'spiti'

    def __init__(self, spec: ProblemSpec, induction: Optional[InductionConfig] = None,
                 planner: Optional[PlannerConfig] = None,
                 exploration: Optional[ExplorationConfig] = None,
                 rng: Optional[np.random.Generator] = None):
        super().__init__(spec, exploration, rng)
        self.model = LearnedModel.for_problem(spec, induction)
        self.planner = planner or PlannerConfig(gamma=self.exploration.gamma)
        self.value: ValueTree = ZERO_VALUE
        self.q_trees: QTreeSet = tuple(ZERO_VALUE for _ in range(spec.n_actions))
        self.learn_calls = 0
        self.plan_calls = 0

    def act(self, state: State) -> int:
        return select_action(self.q_trees, state, self.exploration, self.rng)

    def learn(self, transition: Transition):
        spiti_learn(self.model, transition.state, transition.action, transition.next_state,
                    transition.reward, transition.terminal)
        self.learn_calls += 1

    def plan(self):
        self.q_trees, self.value = plan_step(model_to_spec(self.model), self.value,
                                             self.planner.gamma, self.planner.backups_per_step)
        self.plan_calls += 1

    def observe(self, transition: Transition):
        self.learn(transition)
        self.plan()

    def model_nodes(self) -> int:
        return self.model.node_count()

    def greedy_policy(self) -> PolicyTree:
        return greedy_policy(self.q_trees)


def sdyna_step(agent: SpitiAgent, env: Environment) -> RunRecord:
    """Act, execute, learn, plan"""
    return agent.step(env)
