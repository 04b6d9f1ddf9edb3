"""Tests for incremental chi-square gated tree induction"""

import numpy as np
import pytest

from sdyna.trees.decision_tree import Leaf, Node
from sdyna.trees.induction import (ClassDistribution, InductionConfig, LearnerTree, NodeStatistics,
                                   best_test, split_decision)
from sdyna.utils.errors import DomainError

# class equals the first attribute; the second is noise
CYCLE = [((0, 0), 0), ((0, 1), 0), ((1, 0), 1), ((1, 1), 1)]


def stream(learner, examples):
    for attributes, cls in examples:
        learner.add_example(attributes, cls)
    return learner


def internal_nodes(learner):
    return [node for node in learner._nodes() if not node.is_leaf]


class TestClassDistribution:
    def test_empty_is_uniform(self):
        dist = ClassDistribution((0, 0, 0), (0, 1, 2))
        assert dist.probabilities == pytest.approx((1 / 3, 1 / 3, 1 / 3))
        assert dist.expected_value() == 0.0

    def test_frequencies(self):
        dist = ClassDistribution((1, 3), (0.0, 1.0))
        assert dist.probabilities == (0.25, 0.75)
        assert dist.expected_value() == pytest.approx(0.75)


class TestSplitGating:
    def test_threshold_is_inclusive(self):
        config = InductionConfig(tau_chi2=7.88)
        assert split_decision(7.88, config)
        assert not split_decision(7.87, config)

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            InductionConfig(tau_chi2=-1.0)

    def test_best_test_prefers_lowest_attribute_on_ties(self):
        stats = NodeStatistics.from_examples(
            [((0, 0), 0), ((1, 1), 1)], np.array([2, 2]), np.array([True, True]), 2)
        assert best_test(stats) == (0, pytest.approx(2.0))

    def test_best_test_skips_used_attributes(self):
        stats = NodeStatistics.from_examples(
            CYCLE, np.array([2, 2]), np.array([False, True]), 2)
        assert best_test(stats) == (1, 0.0)


class TestLearnerTree:
    def test_no_split_below_threshold(self):
        learner = stream(LearnerTree([2, 2], class_values=[0, 1]), CYCLE)
        assert learner.node_count() == 1
        assert learner.example_count == 4

    def test_splits_on_informative_attribute(self):
        learner = stream(LearnerTree([2, 2], class_values=[0, 1]), CYCLE * 3)
        tree = learner.freeze()
        assert tree == Node(0, (Leaf(ClassDistribution((6, 0), (0, 1))),
                                Leaf(ClassDistribution((0, 6), (0, 1)))))
        assert learner.installed_tests() == [(0, pytest.approx(8.0))]

    def test_zero_threshold_still_never_splits_pure_nodes(self):
        learner = stream(LearnerTree([2, 2], class_values=[0, 1], config=InductionConfig(0.0)),
                         [((0, 0), 0), ((1, 1), 0), ((0, 1), 0)])
        assert learner.node_count() == 1

    def test_untrained_learner_predicts_uniform(self):
        learner = LearnerTree([2], class_values=[0, 1])
        assert learner.predict_distribution((1,)).probabilities == (0.5, 0.5)

    def test_batch_matches_stream_on_separable_data(self):
        streamed = stream(LearnerTree([2, 2], class_values=[0, 1]), CYCLE * 3)
        batched = LearnerTree([2, 2], class_values=[0, 1]).add_examples(CYCLE * 3)
        assert batched.freeze() == streamed.freeze()
        assert sorted(batched.stored_examples()) == sorted(streamed.stored_examples())

    def test_open_class_set_grows(self):
        learner = LearnerTree([2, 2])
        learner.add_example((0, 0), 0.5)
        learner.add_example((1, 0), 1.0)
        assert learner.class_values == [0.5, 1.0]
        assert learner.predict_value((0, 1)) == pytest.approx(0.75)

    def test_declared_classes_are_closed(self):
        learner = LearnerTree([2], class_values=[0, 1])
        with pytest.raises(DomainError):
            learner.add_example((0,), 2)

    def test_attributes_checked(self):
        learner = LearnerTree([2, 3], class_values=[0, 1])
        with pytest.raises(DomainError):
            learner.add_example((0, 3), 1)
        with pytest.raises(DomainError):
            learner.add_example((0,), 1)

    def test_freeze_is_cached_until_next_example(self):
        learner = stream(LearnerTree([2], class_values=[0, 1]), [((0,), 0)])
        first = learner.freeze()
        assert learner.freeze() is first
        learner.add_example((1,), 1)
        assert learner.freeze() is not first

    def test_installed_tests_stay_best_and_above_threshold(self):
        rng = np.random.default_rng(7)
        config = InductionConfig(tau_chi2=3.84)
        learner = LearnerTree([2, 2, 3], class_values=[0, 1, 2], config=config)
        for _ in range(400):
            attrs = tuple(int(v) for v in rng.integers([2, 2, 3]))
            noisy = rng.random() < 0.2
            cls = int(rng.integers(3)) if noisy else (attrs[0] + attrs[2]) % 3
            learner.add_example(attrs, cls)
        nodes = internal_nodes(learner)
        assert nodes
        for node in nodes:
            candidates = np.flatnonzero(node.stats.candidates)
            scores = node.stats.chi2_scores(candidates)
            installed = node.stats.chi2_of(node.test)
            assert installed >= config.tau_chi2
            assert installed >= scores.max() - config.restructure_margin - 1e-9
        assert learner.tested_attributes() >= {0, 2}

    def test_ensure_best_test_keeps_valid_tree(self):
        learner = stream(LearnerTree([2, 2], class_values=[0, 1]), CYCLE * 3)
        before = learner.freeze()
        assert learner.ensure_best_test().freeze() == before


def sample_examples(rng, count, n_attributes, label):
    attributes = rng.integers(2, size=(count, n_attributes))
    return [(tuple(int(v) for v in row), int(label(row, rng))) for row in attributes]


def fair_coin(row, rng):
    return rng.random() < 0.5


def noisy_copy(var, flip=0.1):
    def label(row, rng):
        return row[var] ^ (rng.random() < flip)
    return label


# P(class = 1) for the CPD X0 ? (X1 ? 0.5 : 0.8) : 0.2
def tree_cpd_probability(row):
    if row[0] == 0:
        return 0.2
    return 0.8 if row[1] == 0 else 0.5


def tree_cpd(row, rng):
    return rng.random() < tree_cpd_probability(row)


class TestStatisticalGuarantees:
    @pytest.mark.slow
    def test_independent_class_rarely_splits(self):
        n_attributes, runs = 3, 20
        spurious = 0
        for seed in range(runs):
            rng = np.random.default_rng(seed)
            learner = stream(LearnerTree([2] * n_attributes, class_values=[0, 1]),
                             sample_examples(rng, 100, n_attributes, fair_coin))
            spurious += len(learner.installed_tests())
        assert spurious / (runs * n_attributes) <= 0.05

    @pytest.mark.slow
    def test_stationary_stream_recovers_tree_cpd(self):
        runs = 20
        found = 0
        for seed in range(runs):
            rng = np.random.default_rng(seed)
            learner = stream(LearnerTree([2, 2, 2], class_values=[0, 1]),
                             sample_examples(rng, 8000, 3, tree_cpd))
            if learner.tested_attributes() >= {0, 1}:
                found += 1
            for row in np.ndindex(2, 2, 2):
                learned = learner.predict_distribution(row).probabilities[1]
                assert learned == pytest.approx(tree_cpd_probability(row), abs=0.05)
        assert found / runs >= 0.95

    @pytest.mark.parametrize('seed', range(10))
    def test_shifted_stream_matches_batch_build(self, seed):
        rng = np.random.default_rng(seed)
        before = sample_examples(rng, 300, 3, noisy_copy(0))
        after = sample_examples(rng, 600, 3, noisy_copy(1))
        learner = stream(LearnerTree([2, 2, 2], class_values=[0, 1]), before)
        assert learner.root.test == 0
        stream(learner, after).ensure_best_test()
        batched = LearnerTree([2, 2, 2], class_values=[0, 1]).add_examples(before + after)
        assert learner.root.test == 1
        assert learner.freeze() == batched.freeze()
        assert learner.example_count == batched.example_count == 900
