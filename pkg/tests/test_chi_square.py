"""Tests for chi-square statistics"""

import numpy as np
import pytest

from sdyna.stats.chi_square import (CHI2_CAP, chi2_statistic, chi2_statistics, chi2_tail_q,
                                    degrees_of_freedom, two_distribution_chi2)
from sdyna.utils.errors import StatisticsError


class TestContingencyStatistic:
    def test_independent_table_scores_zero(self):
        assert chi2_statistic([[10, 10], [5, 5]]) == pytest.approx(0.0)

    def test_perfect_association_scores_sample_size(self):
        assert chi2_statistic([[6, 0], [0, 6]]) == pytest.approx(12.0)

    def test_known_value(self):
        # expected counts 15 and 35 per row, 30/70 columns
        assert chi2_statistic([[20, 30], [10, 40]]) == pytest.approx(100 / 21)

    def test_empty_row_contributes_nothing(self):
        assert chi2_statistic([[4, 0], [0, 4], [0, 0]]) == pytest.approx(8.0)

    def test_stack_matches_single_tables(self):
        tables = np.array([[[6, 0], [0, 6]], [[3, 3], [3, 3]]])
        assert chi2_statistics(tables) == pytest.approx([12.0, 0.0])

    @pytest.mark.parametrize('table', [[[1, 2]], [[-1, 2], [3, 4]], [[0, 0], [0, 0]]])
    def test_invalid_tables(self, table):
        with pytest.raises(StatisticsError):
            chi2_statistic(table)

    def test_degrees_of_freedom(self):
        assert degrees_of_freedom(2, 2) == 1
        assert degrees_of_freedom(3, 4) == 6


class TestTailProbability:
    def test_zero_statistic_has_tail_one(self):
        assert chi2_tail_q(0.0, 1) == 1.0

    def test_default_threshold_is_half_percent(self):
        assert 0.0045 <= chi2_tail_q(7.88, 1) <= 0.0055

    def test_known_critical_value(self):
        assert chi2_tail_q(3.841458820694124, 1) == pytest.approx(0.05, rel=1e-6)

    def test_two_degrees_of_freedom_is_exponential(self):
        assert chi2_tail_q(4.0, 2) == pytest.approx(np.exp(-2.0))

    def test_cap_maps_to_zero(self):
        assert chi2_tail_q(CHI2_CAP, 1) == pytest.approx(0.0, abs=1e-300)

    def test_monotone(self):
        values = [chi2_tail_q(x, 1) for x in (0.1, 1.0, 5.0, 20.0)]
        assert values == sorted(values, reverse=True)

    def test_invalid_arguments(self):
        with pytest.raises(StatisticsError):
            chi2_tail_q(-1.0, 1)
        with pytest.raises(StatisticsError):
            chi2_tail_q(1.0, 0)


class TestTwoDistributions:
    def test_identical_distributions(self):
        assert two_distribution_chi2((0.3, 0.7), (0.3, 0.7)) == 0.0

    def test_known_value(self):
        assert two_distribution_chi2((0.5, 0.5), (0.4, 0.6)) == pytest.approx(0.04)

    def test_missing_support_hits_cap(self):
        assert two_distribution_chi2((1.0, 0.0), (0.5, 0.5)) == CHI2_CAP

    def test_estimate_may_drop_support(self):
        assert two_distribution_chi2((0.5, 0.5), (1.0, 0.0)) == pytest.approx(1.0)

    def test_rejects_unnormalized(self):
        with pytest.raises(StatisticsError, match="sums to"):
            two_distribution_chi2((0.5, 0.4), (0.5, 0.5))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(StatisticsError):
            two_distribution_chi2((0.5, 0.5), (0.2, 0.3, 0.5))
