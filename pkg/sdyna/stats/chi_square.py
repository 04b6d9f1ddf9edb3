#!/usr/bin/env python3
"""Chi-square statistics for split gating and model accuracy"""

import logging
import math
from typing import Sequence

import numpy as np
from scipy import special

from sdyna.utils.errors import NumericError, StatisticsError

logger = logging.getLogger(__name__)

# stands in for an infinite statistic when the reference gives zero mass to an observed outcome
CHI2_CAP = 1e6

PROBABILITY_TOLERANCE = 1e-9


def chi2_statistics(tables: np.ndarray) -> np.ndarray:
    """Pearson statistic of each table in a stack of shape (k, rows, cols)

    Rows are attribute values, columns class values. Cells whose expected
    count is zero contribute nothing.
    """
    observed = np.asarray(tables, dtype=float)
    if observed.ndim != 3:
        raise StatisticsError(f"expected a stack of 2-d tables, got shape {observed.shape}")
    if observed.shape[1] < 2 or observed.shape[2] < 2:
        raise StatisticsError(f"tables need at least 2 rows and 2 columns, got {observed.shape[1:]}")
    if np.any(observed < 0):
        raise StatisticsError("contingency counts must be nonnegative")
    totals = observed.sum(axis=(1, 2))
    if np.any(totals <= 0):
        raise StatisticsError("contingency table is empty")
    row_totals = observed.sum(axis=2, keepdims=True)
    col_totals = observed.sum(axis=1, keepdims=True)
    expected = row_totals * col_totals / totals[:, None, None]
    cells = np.divide((observed - expected) ** 2, expected,
                      out=np.zeros_like(expected), where=expected > 0)
    return cells.sum(axis=(1, 2))


def chi2_statistic(table) -> float:
    """Pearson chi-square statistic of one contingency table"""
    observed = np.asarray(table, dtype=float)
    if observed.ndim != 2:
        raise StatisticsError(f"expected a 2-d table, got shape {observed.shape}")
    return float(chi2_statistics(observed[None, :, :])[0])


def degrees_of_freedom(rows: int, cols: int) -> int:
    return (rows - 1) * (cols - 1)


def chi2_tail_q(chi2: float, dof: int = 1) -> float:
    """Q(chi2|dof): probability that a chi-square(dof) variate exceeds chi2

    Regularized upper incomplete gamma Q(dof/2, chi2/2).
    """
    if chi2 < 0:
        raise StatisticsError(f"chi2 must be nonnegative (got {chi2})")
    if dof < 1:
        raise StatisticsError(f"degrees of freedom must be >= 1 (got {dof})")
    q = float(special.gammaincc(dof / 2.0, chi2 / 2.0))
    if not math.isfinite(q):
        raise NumericError(f"incomplete gamma evaluation failed for chi2={chi2}, dof={dof}")
    return min(1.0, max(0.0, q))


def two_distribution_chi2(p_ref: Sequence[float], p_est: Sequence[float]) -> float:
    """Chi-square distance of p_est from the reference distribution p_ref

    Unit mass: sum of (p_est - p_ref)^2 / p_ref. A component with zero
    reference mass and positive estimated mass yields CHI2_CAP.
    """
    ref = np.asarray(p_ref, dtype=float)
    est = np.asarray(p_est, dtype=float)
    if ref.shape != est.shape or ref.ndim != 1:
        raise StatisticsError(f"distribution shapes differ: {ref.shape} vs {est.shape}")
    if ref.size < 2:
        raise StatisticsError("distributions need at least 2 components")
    for name, dist in (('reference', ref), ('estimate', est)):
        if abs(dist.sum() - 1.0) > PROBABILITY_TOLERANCE:
            raise StatisticsError(f"{name} distribution sums to {dist.sum()}, not 1")
    support = ref > 0
    if np.any(~support & (est > PROBABILITY_TOLERANCE)):
        return CHI2_CAP
    value = float(np.sum((est[support] - ref[support]) ** 2 / ref[support]))
    return min(value, CHI2_CAP)
