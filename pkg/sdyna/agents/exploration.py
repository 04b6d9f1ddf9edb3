#!/usr/bin/env python3
"""Epsilon-greedy action selection"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Sequence

import numpy as np

from sdyna.planning.planner import QTreeSet, greedy_action
from sdyna.trees.decision_tree import evaluate

logger = logging.getLogger(__name__)


@dataclass
class ExplorationConfig:
    epsilon: float = 0.1
    gamma: float = 0.9
    gamma_report: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1] (got {self.epsilon})")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExplorationConfig':
        known_fields = {f.name for f in cls.__dataclass_fields__.values()}
        return cls(**{k: v for k, v in data.items() if k in known_fields})


def epsilon_greedy(values: Sequence[float], epsilon: float, rng: np.random.Generator) -> int:
    """Uniform action with probability epsilon, otherwise the greedy one"""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(len(values)))
    return greedy_action(values)


def select_action(qs: QTreeSet, state: Sequence[int], config: ExplorationConfig,
                  rng: np.random.Generator) -> int:
    return epsilon_greedy([evaluate(q, state) for q in qs], config.epsilon, rng)
