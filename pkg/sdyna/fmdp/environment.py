#!/usr/bin/env python3
"""Simulated environment driven by a ground-truth problem"""

import logging
from dataclasses import dataclass

import numpy as np

from sdyna.fmdp.ground import reset_initial
from sdyna.fmdp.model import ProblemSpec, is_terminal, sample_transition, true_reward
from sdyna.trees.decision_tree import State
from sdyna.utils.errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transition:
    state: State
    action: int
    reward: float
    next_state: State
    terminal: bool

    def as_tuple(self):
        return (self.state, self.action, self.reward, self.next_state, self.terminal)


class Environment:
    """Current state plus one seeded generator

    Acting from a terminal state delivers R(s, a) and restarts the episode in a
    fresh initial state; no transition is sampled.
    """

    def __init__(self, spec: ProblemSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.steps = 0
        self.episodes = 0
        self.state = self.reset()

    def reset(self) -> State:
        self.state = reset_initial(self.spec, self.rng)
        self.episodes += 1
        return self.state

    def step(self, action: int) -> Transition:
        if not 0 <= action < self.spec.n_actions:
            raise DomainError(f"action {action} outside 0..{self.spec.n_actions - 1}")
        state = self.state
        reward = true_reward(self.spec, state, action)
        terminal = is_terminal(self.spec, state)
        if terminal:
            next_state = self.reset()
            logger.debug(f"Terminal state {state} reached, restarting at {next_state}")
        else:
            next_state = sample_transition(self.spec, state, action, self.rng)
            self.state = next_state
        self.steps += 1
        return Transition(state, action, reward, next_state, terminal)
