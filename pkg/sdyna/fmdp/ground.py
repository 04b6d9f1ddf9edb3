#!/usr/bin/env python3
"""Enumerated (tabular) view of a factored problem

Used as a verification oracle for the structured planner and to compute the
set of initial states by reachability.
"""

import functools
import itertools
import logging
from collections import deque
from dataclasses import dataclass
from functools import reduce
from typing import List, Sequence, Tuple

import numpy as np

from sdyna.fmdp.model import (ProblemSpec, is_terminal, next_state_marginals,
                              true_reward)
from sdyna.trees.decision_tree import State, evaluate, leaf_regions
from sdyna.utils.errors import ConvergenceError, InfeasibleEnumerationError

logger = logging.getLogger(__name__)

# state-action pairs enumerated for reachability
ENUMERATION_CAP = 2 ** 21
# states held in dense (A, S, S) transition arrays
DENSE_STATE_CAP = 2 ** 10


@dataclass(frozen=True, eq=False)
class GroundMdp:
    """Tabular P(s'|s,a), R(s,a) and terminal flags, states in DomainSpec order"""
    spec: ProblemSpec
    transitions: np.ndarray  # (A, S, S)
    rewards: np.ndarray      # (S, A)
    terminal: np.ndarray     # (S,) bool

    @property
    def n_states(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_actions(self) -> int:
        return self.rewards.shape[1]

    def index(self, state: Sequence[int]) -> int:
        return self.spec.domain.state_index(state)

    def state(self, index: int) -> State:
        return self.spec.domain.state_from_index(index)


def ground_mdp(spec: ProblemSpec) -> GroundMdp:
    """Enumerate every state; each non-terminal row is the Kronecker product of the marginals"""
    domain = spec.domain
    n_states = domain.n_states
    if n_states > DENSE_STATE_CAP:
        raise InfeasibleEnumerationError(
            f"{spec.name}: {n_states} states exceed the dense oracle limit of {DENSE_STATE_CAP}")
    logger.debug(f"Grounding {spec.name}: {n_states} states x {spec.n_actions} actions")
    transitions = np.zeros((spec.n_actions, n_states, n_states))
    rewards = np.zeros((n_states, spec.n_actions))
    terminal = np.zeros(n_states, dtype=bool)
    for s, state in enumerate(domain.states()):
        terminal[s] = is_terminal(spec, state)
        for a in range(spec.n_actions):
            rewards[s, a] = true_reward(spec, state, a)
            if terminal[s]:
                continue
            marginals = [np.asarray(d, dtype=float) for d in next_state_marginals(spec, state, a)]
            transitions[a, s] = reduce(np.kron, marginals)
    return GroundMdp(spec, transitions, rewards, terminal)


def tabular_backup(ground: GroundMdp, values: np.ndarray, gamma: float) -> np.ndarray:
    """Q(s,a) = R(s,a) + gamma * sum_s' P(s'|s,a) V(s'); terminal rows have no future term"""
    future = np.einsum('ast,t->sa', ground.transitions, values)
    return ground.rewards + gamma * future


def value_iteration(ground: GroundMdp, gamma: float, tolerance: float = 1e-12,
                    max_iterations: int = 100000) -> Tuple[np.ndarray, np.ndarray]:
    """Tabular V* and Q* by successive approximation in the sup norm"""
    values = np.zeros(ground.n_states)
    for iteration in range(1, max_iterations + 1):
        q = tabular_backup(ground, values, gamma)
        new_values = q.max(axis=1)
        delta = float(np.max(np.abs(new_values - values)))
        values = new_values
        if delta <= tolerance:
            return values, tabular_backup(ground, values, gamma)
    raise ConvergenceError("tabular value iteration did not converge", delta, max_iterations)


def policy_evaluation(ground: GroundMdp, policy: Sequence[int], gamma: float) -> np.ndarray:
    """Exact V_pi from the linear system (I - gamma P_pi) V = R_pi"""
    actions = np.asarray(policy, dtype=int)
    rows = np.arange(ground.n_states)
    p_pi = ground.transitions[actions, rows, :]
    r_pi = ground.rewards[rows, actions]
    return np.linalg.solve(np.eye(ground.n_states) - gamma * p_pi, r_pi)


def greedy_actions(q: np.ndarray, tolerance: float = 1e-12) -> np.ndarray:
    """Per-state argmax with ties to the lowest action id"""
    best = q.max(axis=1, keepdims=True)
    return np.argmax(q >= best - tolerance, axis=1)


def shortest_path_lengths(ground: GroundMdp) -> np.ndarray:
    """Fewest steps from each state to a terminal state over positive-probability edges

    -1 marks states that cannot reach a terminal state.
    """
    support = ground.transitions.max(axis=0) > 0
    predecessors: List[List[int]] = [[] for _ in range(ground.n_states)]
    for s, t in zip(*np.nonzero(support)):
        predecessors[t].append(s)
    distance = np.full(ground.n_states, -1, dtype=int)
    queue = deque(int(s) for s in np.flatnonzero(ground.terminal))
    for s in queue:
        distance[s] = 0
    while queue:
        t = queue.popleft()
        for s in predecessors[t]:
            if distance[s] < 0:
                distance[s] = distance[t] + 1
                queue.append(s)
    return distance


def successor_support(spec: ProblemSpec, state: Sequence[int], action: int) -> List[State]:
    """Next states with positive probability"""
    supports = [[k for k, p in enumerate(dist) if p > 0]
                for dist in next_state_marginals(spec, state, action)]
    return [tuple(s) for s in itertools.product(*supports)]


def _check_enumeration(spec: ProblemSpec, pairs: int):
    if pairs > ENUMERATION_CAP:
        raise InfeasibleEnumerationError(
            f"{spec.name}: enumerating {pairs} state-action pairs exceeds {ENUMERATION_CAP}; "
            f"add an explicit 'initial' rule to the problem file")


@functools.lru_cache(maxsize=32)
def _initial_states(spec: ProblemSpec, use_declared: bool) -> Tuple[State, ...]:
    domain = spec.domain
    if use_declared and spec.initial is not None:
        _check_enumeration(spec, domain.n_states)
        return tuple(s for s in domain.states() if evaluate(spec.initial, s))

    _check_enumeration(spec, domain.n_states * spec.n_actions)
    states = list(domain.states())
    reaches = {s for s in states if is_terminal(spec, s)}
    if not reaches:
        return ()
    open_states = [s for s in states if s not in reaches]
    successors = {s: [successor_support(spec, s, a) for a in range(spec.n_actions)]
                  for s in open_states}
    changed = True
    while changed:
        changed = False
        remaining = []
        for s in open_states:
            if any(any(t in reaches for t in succ) for succ in successors[s]):
                reaches.add(s)
                changed = True
            else:
                remaining.append(s)
        open_states = remaining
    return tuple(s for s in states if s in reaches and not is_terminal(spec, s))


def initial_states(spec: ProblemSpec, use_declared: bool = True) -> Tuple[State, ...]:
    """Non-terminal states from which some policy reaches a terminal state

    A declared initial rule in the problem overrides reachability.
    """
    return _initial_states(spec, use_declared)


def reset_initial(spec: ProblemSpec, rng: np.random.Generator) -> State:
    """Uniform draw from the initial states; uniform over all states when there are none"""
    domain = spec.domain
    if spec.initial is not None:
        regions = [r for r in leaf_regions(spec.initial, domain) if r.label]
        if regions:
            pick = int(rng.integers(sum(r.region_size for r in regions)))
            for region in regions:
                if pick < region.region_size:
                    break
                pick -= region.region_size
            fixed = region.fixed
            return tuple(fixed[i] if i in fixed else int(rng.integers(size))
                         for i, size in enumerate(domain.sizes))
    else:
        states = initial_states(spec)
        if states:
            return states[int(rng.integers(len(states)))]
    return tuple(int(rng.integers(size)) for size in domain.sizes)
