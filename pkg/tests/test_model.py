"""Tests for problem definitions, the ground oracle, simulation and the learned model"""

from collections import Counter

import numpy as np
import pytest

from sdyna.agents.spiti import spiti_learn
from sdyna.experiments.runner import learn_from_trajectory, random_trajectory
from sdyna.experiments.metrics import model_accuracy
from sdyna.fmdp.environment import Environment
from sdyna.fmdp.ground import (DENSE_STATE_CAP, ground_mdp, initial_states, reset_initial,
                               shortest_path_lengths, successor_support, value_iteration)
from sdyna.fmdp.model import (LearnedModel, extract_parents, is_terminal, next_state_marginals,
                              persistence_tree, sample_transition, true_reward, validate_spec)
from sdyna.fmdp.problems import gen_expon, gen_linear
from sdyna.trees.decision_tree import Leaf, Node, leaf_regions, leaves, restrict, tested_variables
from sdyna.trees.induction import InductionConfig
from sdyna.utils.errors import (DomainError, InfeasibleEnumerationError, SimulationError,
                                ValidationError)

HUC, HRC, WET, RAINING, UMBRELLA, OFFICE = range(6)
GO, BUYC, DELC, GETU = range(4)


class TestProblemSpec:
    def test_coffee_shape(self, coffee):
        assert coffee.variable_names == ('huc', 'hrc', 'wet', 'raining', 'umbrella', 'office')
        assert coffee.actions == ('go', 'buyc', 'delc', 'getu')
        assert coffee.domain.n_states == 64
        assert coffee.max_reward() == 1.0

    def test_reward_tree_per_action(self, coffee):
        r = coffee.reward_tree(GO)
        assert true_reward(coffee, (1, 0, 1, 0, 0, 0), GO) == pytest.approx(0.8)
        assert coffee.reward_tree(GO) is r

    def test_omitted_cpds_persist(self, coffee):
        assert coffee.cpd(GO, HRC) == persistence_tree(HRC, 2)
        assert coffee.cpd(BUYC, OFFICE) == persistence_tree(OFFICE, 2)

    def test_validation_names_the_bad_cpd(self, coffee):
        bad_row = list(coffee.transitions[GO])
        bad_row[OFFICE] = Leaf((0.1, 0.8))
        broken = coffee.replace(transitions=(tuple(bad_row),) + coffee.transitions[1:])
        with pytest.raises(ValidationError) as info:
            validate_spec(broken)
        assert "action 'go', variable 'office'" in str(info.value)
        assert "sums to 0.9" in str(info.value)

    def test_validation_rejects_non_boolean_terminal(self, coffee):
        with pytest.raises(ValidationError, match="terminal tree"):
            validate_spec(coffee.replace(terminal=Leaf(1.0)))

    def test_dbn_parents(self, coffee):
        graph = extract_parents(coffee)
        assert graph.of(GO, OFFICE) == {OFFICE}
        assert graph.of(GO, WET) == {WET, RAINING, UMBRELLA}
        assert graph.of(DELC, HUC) == {HUC, OFFICE, HRC}


class TestSimulation:
    def test_marginals(self, coffee):
        marginals = next_state_marginals(coffee, (0, 0, 0, 0, 0, 0), GO)
        assert marginals[OFFICE] == (0.1, 0.9)
        assert marginals[HRC] == (1.0, 0.0)

    def test_sampling_frequency(self, coffee, rng):
        state = (0, 0, 0, 0, 0, 0)
        hits = sum(sample_transition(coffee, state, GO, rng)[OFFICE] for _ in range(2000))
        assert 0.85 <= hits / 2000 <= 0.95

    def test_terminal_state_has_no_transitions(self, coffee, rng):
        with pytest.raises(SimulationError):
            sample_transition(coffee, (1, 0, 0, 0, 0, 0), GO, rng)

    def test_successor_support(self, coffee):
        support = successor_support(coffee, (0, 0, 0, 0, 0, 0), GO)
        assert sorted(support) == [(0, 0, 0, 0, 0, 0), (0, 0, 0, 0, 0, 1)]


class TestGroundOracle:
    def test_coffee_rows_are_distributions(self, coffee):
        ground = ground_mdp(coffee)
        sums = ground.transitions.sum(axis=2)
        open_rows = sums[:, ~ground.terminal]
        assert open_rows.size == 128
        assert np.allclose(open_rows, 1.0)
        assert np.all(sums[:, ground.terminal] == 0.0)

    def test_too_many_states(self):
        with pytest.raises(InfeasibleEnumerationError):
            ground_mdp(gen_linear(11))
        assert 2 ** 10 <= DENSE_STATE_CAP

    def test_linear_initial_states_by_reachability(self):
        spec = gen_linear(2)
        assert initial_states(spec, use_declared=False) == ((0, 0), (1, 0))
        assert initial_states(spec) == ((0, 0), (1, 0))

    def test_coffee_initial_states(self, coffee):
        states = initial_states(coffee)
        assert len(states) == 32
        assert not any(is_terminal(coffee, s) for s in states)

    def test_no_terminal_means_no_initial_states(self, absorbing_spec):
        assert initial_states(absorbing_spec) == ()

    def test_expon_counts_in_binary(self):
        ground = ground_mdp(gen_expon(3))
        assert shortest_path_lengths(ground)[ground.index((0, 0, 0))] == 7

    def test_linear_path_is_linear(self):
        ground = ground_mdp(gen_linear(4))
        assert shortest_path_lengths(ground)[ground.index((0, 0, 0, 0))] == 4

    def test_value_iteration_on_absorbing_chain(self, absorbing_spec):
        values, q = value_iteration(ground_mdp(absorbing_spec), 0.9)
        assert values == pytest.approx([9.0, 10.0])
        assert q.shape == (2, 1)

    def test_reset_honours_declared_rule(self, rng):
        spec = gen_linear(3)
        for _ in range(50):
            assert reset_initial(spec, rng)[2] == 0

    def test_linear2_initial_states_drawn_uniformly(self, rng):
        spec = gen_linear(2)
        draws = Counter(reset_initial(spec, rng) for _ in range(10000))
        assert set(draws) == {(0, 0), (1, 0)}
        assert draws[(0, 0)] / 10000 == pytest.approx(0.5, abs=0.02)


class TestEnvironment:
    def test_starts_in_initial_state(self, coffee, rng):
        env = Environment(coffee, rng)
        assert env.state in initial_states(coffee)
        assert env.episodes == 1

    def test_terminal_step_delivers_reward_and_restarts(self, coffee, rng):
        env = Environment(coffee, rng)
        env.state = (1, 0, 1, 0, 0, 1)
        tr = env.step(BUYC)
        assert tr.terminal
        assert tr.reward == pytest.approx(0.8)
        assert not is_terminal(coffee, tr.next_state)
        assert env.state == tr.next_state
        assert env.episodes == 2

    def test_rejects_unknown_action(self, coffee, rng):
        with pytest.raises(DomainError):
            Environment(coffee, rng).step(4)

    def test_same_seed_same_trajectory(self, coffee):
        a = random_trajectory(coffee, 100, np.random.default_rng(3))
        b = random_trajectory(coffee, 100, np.random.default_rng(3))
        assert a == b


class TestLearnedModel:
    def test_empty_model(self, coffee):
        model = LearnedModel.for_problem(coffee)
        assert model.node_count() == 24
        spec = validate_spec(model.to_spec())
        assert spec.cpd(GO, OFFICE) == Leaf((0.5, 0.5))
        assert spec.reward == Leaf(0.0)
        assert spec.terminal == coffee.terminal

    def test_to_spec_reuses_unchanged_trees(self, coffee):
        model = LearnedModel.for_problem(coffee)
        first = model.to_spec()
        second = model.to_spec()
        assert second.cpd(GO, OFFICE) is first.cpd(GO, OFFICE)
        assert second.reward is first.reward

    def test_terminal_steps_teach_reward_only(self, coffee):
        trajectory = [
            ((0, 0, 0, 0, 0, 0), GO, 0.0, (0, 0, 0, 0, 0, 1), False),
            ((1, 0, 0, 0, 0, 1), GO, 1.0, (0, 0, 0, 0, 0, 0), True),
        ]
        model = LearnedModel.for_problem(coffee).add_trajectory(trajectory)
        assert model.reward_learner.example_count == 2
        assert all(model.learner(GO, i).example_count == 1 for i in range(6))
        assert model.learner(BUYC, 0).example_count == 0

    def test_incremental_observations(self, coffee):
        model = LearnedModel.for_problem(coffee)
        model.observe_reward((0, 0, 0, 0, 0, 0), GO, 0.0)
        model.observe_transition((0, 0, 0, 0, 0, 0), GO, (0, 0, 0, 0, 0, 1))
        spec = model.to_spec()
        assert spec.cpd(GO, OFFICE) == Leaf((0.0, 1.0))
        assert set(leaves(spec.reward)) == {0.0}

    def test_learns_structure_from_random_trajectory(self, coffee):
        trajectory = random_trajectory(coffee, 2000, np.random.default_rng(11))
        model = learn_from_trajectory(coffee, trajectory, InductionConfig(7.88))
        assert OFFICE in extract_parents(model).of(GO, OFFICE)
        assert HRC in extract_parents(model).of(GO, HRC)
        empty = LearnedModel.for_problem(coffee)
        assert model_accuracy(coffee, model).q_overall > model_accuracy(coffee, empty).q_overall


def leaf_path(tree, state):
    """Assignments along the path state takes through tree"""
    path = []
    while isinstance(tree, Node):
        path.append((tree.var, state[tree.var]))
        tree = tree.children[state[tree.var]]
    return tuple(path)


def learn_incrementally(spec, steps, seed):
    model = LearnedModel.for_problem(spec, InductionConfig(7.88))
    trajectory = random_trajectory(spec, steps, np.random.default_rng(seed))
    for tr in trajectory:
        spiti_learn(model, tr.state, tr.action, tr.next_state, tr.reward, tr.terminal)
    return model, trajectory


@pytest.mark.slow
class TestStructureRecovery:
    SEEDS = range(10)

    def test_linear_parents_are_never_spurious(self):
        spec = gen_linear(4)
        truth = extract_parents(spec)
        for seed in self.SEEDS:
            model, _ = learn_incrementally(spec, 4000, seed)
            learned = extract_parents(model)
            for key, parents in learned.parents.items():
                assert parents <= truth.parents[key], (seed, key)

    def test_linear_parents_recovered_where_well_observed(self):
        spec = gen_linear(4)
        goal = spec.n_vars - 1
        exact_runs = 0
        for seed in self.SEEDS:
            model, trajectory = learn_incrementally(spec, 4000, seed)
            learned = extract_parents(model)
            exact = True
            for a in range(spec.n_actions):
                for i in range(spec.n_vars):
                    # sources are never terminal, so compare on the open half X_n = false
                    open_cpd = restrict(spec.cpd(a, i), goal, 0)
                    counts = Counter(leaf_path(open_cpd, tr.state) for tr in trajectory
                                     if tr.action == a and not tr.terminal)
                    regions = leaf_regions(open_cpd, spec.domain)
                    if len(counts) < len(regions) or min(counts.values()) < 200:
                        continue
                    exact = exact and learned.of(a, i) == tested_variables(open_cpd)
            exact_runs += exact
        assert exact_runs >= 9
