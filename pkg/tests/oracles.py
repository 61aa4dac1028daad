"""Independent dense oracles for checking the certified paths.

Everything here deliberately avoids the package's own kernels: spectral
radii come from LAPACK, linear systems from dense LU, correlation counts
from quadratic sign sums, and the textbook sweeps are plain interpreted
loops over the CSR arrays.
"""

import math

import numpy as np


def rho_dense(dense: np.ndarray) -> float:
    """Spectral radius from the full eigenvalue decomposition."""
    if dense.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(dense))))


def rho_power(dense: np.ndarray, steps: int = 10_000, restarts: int = 8,
              tol: float = 1e-9, seed: int = 0) -> float:
    """Spectral radius by restarted power iteration, no deflation.

    Runs on A + I so periodic spectra stop oscillating (the radius of a
    nonnegative matrix shifts by exactly one); each restart begins from a
    fresh positive vector and the largest settled estimate wins.  Converges
    like the spectral gap, so a defective dominant eigenvalue (possible for
    reducible matrices) only reaches polynomial accuracy within the step
    budget; rho_dense is the reference in that regime.
    """
    n = dense.shape[0]
    if n == 0:
        return 0.0
    shifted = dense + np.eye(n)
    rng = np.random.default_rng(seed)
    per_run = max(1, steps // restarts)
    best = 0.0
    for _ in range(restarts):
        x = rng.random(n) + 0.5
        x /= x.sum()
        estimate = np.inf
        for _ in range(per_run):
            y = shifted @ x
            new_estimate = float(y.sum())
            x = y / new_estimate
            if abs(new_estimate - estimate) <= tol * max(1.0, new_estimate):
                estimate = new_estimate
                break
            estimate = new_estimate
        best = max(best, estimate)
    return best - 1.0


def solve_dense(s: float, dense: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.solve(s * np.eye(dense.shape[0]) - dense, b)


def jacobi_step(a, b, x, omega, s):
    """Textbook simultaneous-update sweep, ascending columns per row."""
    n = a.n
    xn = np.empty(n)
    for i in range(n):
        acc = 0.0
        for k in range(a.row_offsets[i], a.row_offsets[i + 1]):
            j = a.col_indices[k]
            if j == i:
                continue
            acc += a.values[k] * x[j]
        xn[i] = (1.0 - omega) * x[i] + omega * (b[i] + acc) / (s - a.diag[i])
    return xn


def gauss_seidel_step(a, b, x, omega, s):
    """Textbook in-place ascending sweep; earlier components read fresh."""
    n = a.n
    xn = x.copy()
    for i in range(n):
        acc = 0.0
        for k in range(a.row_offsets[i], a.row_offsets[i + 1]):
            j = a.col_indices[k]
            if j == i:
                continue
            acc += a.values[k] * xn[j]
        xn[i] = (1.0 - omega) * x[i] + omega * (b[i] + acc) / (s - a.diag[i])
    return xn


def brute_tau(r: np.ndarray, s: np.ndarray) -> float:
    """Quadratic evaluation of the tie-aware correlation.

    Counts are exact integers and the closing expression matches the
    package's formula symbol for symbol, so agreement must be bitwise.
    """
    n = len(r)
    upper = np.triu_indices(n, 1)
    sign_r = np.sign(r[:, None] - r[None, :])[upper].astype(np.int64)
    sign_s = np.sign(s[:, None] - s[None, :])[upper].astype(np.int64)
    numerator = int(np.sum(sign_r * sign_s))
    untied_r = int(np.sum(sign_r != 0))
    untied_s = int(np.sum(sign_s != 0))
    if untied_r == 0 or untied_s == 0:
        raise ZeroDivisionError("degenerate score vector")
    tau = float(numerator) / math.sqrt(float(untied_r) * float(untied_s))
    return min(1.0, max(-1.0, tau))


def dense_strong_pagerank(g_dense: np.ndarray, d: np.ndarray, alpha: float,
                          v: np.ndarray) -> np.ndarray:
    """Dense dangling-completed PageRank with redistribution along v."""
    p = g_dense + np.outer(d, v)
    n = g_dense.shape[0]
    return (1.0 - alpha) * np.linalg.solve(np.eye(n) - alpha * p.T, v)
