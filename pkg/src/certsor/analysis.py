"""Tie-aware rank correlation and score rounding.

Certified absolute error bounds exist so that scores can be rounded onto a
grid coarser than the error before comparing rankings; otherwise iteration
noise turns tied pairs into coin flips and drags the correlation of two
identical rankings toward 1/sqrt(2).
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels


class DegenerateScoresError(ValueError):
    """A score vector with every pair tied has no defined correlation."""


def _tie_pair_count(change_mask: np.ndarray) -> int:
    """Sum of t*(t-1)/2 over run lengths, for a sorted key's change mask."""
    starts = np.flatnonzero(change_mask)
    lengths = np.diff(np.append(starts, change_mask.size))
    return int(np.sum(lengths * (lengths - 1) // 2))


def kendall_tau(r: np.ndarray, s: np.ndarray) -> float:
    """Tie-aware pairwise-concordance correlation of two score vectors.

    Equals sum_{i<j} sgn(r_i - r_j) sgn(s_i - s_j) divided by the square
    roots of the untied pair counts of each vector.  Computed in
    O(n log n): sort by (r, s), count discordances by merge sort, and keep
    every pair count in exact integers, so the result is bit-identical to
    the quadratic formula evaluated on the same counts.
    """
    r = np.asarray(r, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if r.shape != s.shape or r.ndim != 1:
        raise ValueError("score vectors must be 1-d and of equal length")
    n = r.size
    if n < 2:
        raise ValueError("need at least two scores")
    if np.any(np.isnan(r)) or np.any(np.isnan(s)):
        raise ValueError("scores must be NaN-free")
    order = np.lexsort((s, r))
    rs = r[order]
    ss = s[order]
    r_change = np.ones(n, dtype=bool)
    r_change[1:] = rs[1:] != rs[:-1]
    joint_change = r_change.copy()
    joint_change[1:] |= ss[1:] != ss[:-1]
    ties_r = _tie_pair_count(r_change)
    ties_joint = _tie_pair_count(joint_change)
    s_sorted = np.sort(s, kind="stable")
    s_change = np.ones(n, dtype=bool)
    s_change[1:] = s_sorted[1:] != s_sorted[:-1]
    ties_s = _tie_pair_count(s_change)
    discordant = int(kernels.merge_count_inversions(ss))
    total = n * (n - 1) // 2
    untied_r = total - ties_r
    untied_s = total - ties_s
    if untied_r == 0 or untied_s == 0:
        raise DegenerateScoresError("one vector has all pairs tied")
    numerator = total - ties_r - ties_s + ties_joint - 2 * discordant
    # One square root of the product, not a product of square roots: the
    # latter can push identical rankings an ulp above 1.
    tau = float(numerator) / math.sqrt(float(untied_r) * float(untied_s))
    return min(1.0, max(-1.0, tau))


def round_scores(x: np.ndarray, decimal_digits: int) -> np.ndarray:
    """Round half to even at the given decimal position."""
    if decimal_digits < 0:
        raise ValueError("decimal_digits must be nonnegative")
    return np.round(np.asarray(x, dtype=np.float64), decimal_digits)
