#!/usr/bin/env python3
"""Per-step records emitted by every agent"""

from dataclasses import dataclass

from sdyna.trees.decision_tree import State


@dataclass(frozen=True)
class RunRecord:
    t: int
    state: State
    action: int
    reward: float
    r_disc: float
    model_nodes: int
    terminal: bool = False
