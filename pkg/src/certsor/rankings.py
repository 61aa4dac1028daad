"""Katz and PageRank drivers on top of the certified solver.

Both indices are row-vector systems over a graph matrix; the drivers
transpose once and hand the solver a column-action system, so the weight
vector passed in must certify the transposed operator (which is what the
solver re-checks before iterating).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sor import SolveCertificate, SorConfig, Sequential, solve
from .sparse import SparseMatrix, matvec, row_sums, transpose
from .suitable import SuitableResult, SuitableStatus

STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DanglingOperator:
    """base + u d^T applied on the fly.

    Used for the dangling-node completion of a transposed PageRank matrix;
    the dangling columns are structurally empty in ``base``, so the rank-one
    part never overlaps a stored entry.
    """

    base: SparseMatrix
    u: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.ascontiguousarray(self.u, dtype=np.float64))
        object.__setattr__(self, "d", np.ascontiguousarray(self.d, dtype=np.float64))
        if self.u.shape != (self.base.n,) or self.d.shape != (self.base.n,):
            raise ValueError("rank-one factors must match the matrix dimension")
        if self.u.min() < 0.0 or self.d.min() < 0.0:
            raise ValueError("rank-one factors must be nonnegative")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def diag(self) -> np.ndarray:
        return self.base.diag + self.u * self.d

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return matvec(self.base, x) + self.u * float(self.d @ x)


def _require_suitable(suit: SuitableResult):
    if suit.status is not SuitableStatus.SUITABLE or suit.w is None:
        raise ValueError(f"need a successful suitability result, got {suit.status}")


def _trivial_certificate(n: int, schedule_kind: str) -> SolveCertificate:
    return SolveCertificate(r=0.0, omega=1.0, s=1.0, sigma=0.0, iterations=0,
                            wnorm_bound=0.0, supnorm_bound=0.0,
                            schedule=schedule_kind, quantized=False,
                            omega_max=2.0, certified=True,
                            last_step_supnorm=0.0)


def katz(m: SparseMatrix, alpha: float, v: np.ndarray, suit: SuitableResult,
         *, target_error: float = 1e-10, omega: float = 1.0, schedule=None,
         max_iterations: int = 100_000, use_quantized: bool = False,
         iterate_log: list | None = None) -> tuple[np.ndarray, SolveCertificate]:
    """Attenuated path-counting scores k with k^T = v^T (I - alpha M)^-1.

    Solved as ((1/alpha) I - M^T) k = v / alpha, so one suitability result
    for M^T certifies every attenuation below 1/sigma; the certificate
    bounds the sup norm of the score error.
    """
    _require_suitable(suit)
    v = np.asarray(v, dtype=np.float64)
    if alpha <= 0.0 or alpha * suit.sigma >= 1.0:
        raise ValueError(
            f"alpha must lie in (0, 1/sigma) = (0, {1.0 / suit.sigma}) for a "
            "certified contraction")
    op = transpose(m)
    cfg = SorConfig(s=1.0 / alpha, sigma=suit.sigma, w=suit.w,
                    target_error=target_error, omega=omega,
                    max_iterations=max_iterations, use_quantized=use_quantized)
    schedule = Sequential() if schedule is None else schedule
    return solve(op, v / alpha, cfg, schedule, iterate_log=iterate_log)


def _check_substochastic(g: SparseMatrix):
    sums = row_sums(g)
    if sums.size and float(sums.max()) > 1.0 + STOCHASTIC_TOL:
        raise ValueError(f"rows must sum to at most 1, found {sums.max()}")


def pseudorank(g: SparseMatrix, alpha: float, v: np.ndarray,
               suit: SuitableResult, *, target_error: float = 1e-10,
               omega: float = 1.0, schedule=None, max_iterations: int = 100_000,
               use_quantized: bool = False, iterate_log: list | None = None
               ) -> tuple[np.ndarray, SolveCertificate]:
    """Damped substochastic propagation p = (1 - alpha) (I - alpha G^T)^-1 v.

    ``g`` is the row-normalized graph with dangling rows left null; the
    suitability result must certify G^T.  Parallel to the dangling-completed
    PageRank vector when the dangling mass is redistributed like v.
    """
    v = np.asarray(v, dtype=np.float64)
    if alpha == 0.0:
        scores = v.copy()
        if iterate_log is not None:
            iterate_log.append(scores)
        return scores, _trivial_certificate(g.n, "direct")
    if alpha < 0.0 or alpha >= 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    _check_substochastic(g)
    _require_suitable(suit)
    if alpha * suit.sigma >= 1.0:
        raise ValueError(
            f"alpha {alpha} is not below 1/sigma = {1.0 / suit.sigma}")
    op = transpose(g)
    cfg = SorConfig(s=1.0 / alpha, sigma=suit.sigma, w=suit.w,
                    target_error=target_error, omega=omega,
                    max_iterations=max_iterations, use_quantized=use_quantized)
    schedule = Sequential() if schedule is None else schedule
    b = v * ((1.0 - alpha) / alpha)
    return solve(op, b, cfg, schedule, iterate_log=iterate_log)


def _check_dangling_indicator(g: SparseMatrix, d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    degrees = np.diff(g.row_offsets)
    if not np.array_equal(d != 0.0, degrees == 0):
        raise ValueError("dangling indicator does not mark exactly the null rows")
    return d


def strong_pagerank(g: SparseMatrix, d: np.ndarray, alpha: float,
                    v: np.ndarray, suit: SuitableResult, **solver_options
                    ) -> tuple[np.ndarray, SolveCertificate]:
    """PageRank with the dangling mass redistributed along the preference
    vector itself: the l1-normalized pseudorank.

    The certificate is the pseudorank's; the normalizing mass is reported on
    the certificate (``pseudorank_l1``) rather than silently folded into the
    bound, because the division is itself inexact.
    """
    d = _check_dangling_indicator(g, d)
    p, cert = pseudorank(g, alpha, v, suit, **solver_options)
    mass = float(np.sum(np.abs(p)))
    if mass == 0.0:
        raise ValueError("pseudorank has no mass; preference vector must be "
                         "nonnegative and nonzero")
    cert.pseudorank_l1 = mass
    return p / mass, cert


def generic_pagerank(g: SparseMatrix, d: np.ndarray, u: np.ndarray,
                     alpha: float, v: np.ndarray, suit: SuitableResult, *,
                     target_error: float = 1e-10, omega: float = 1.0,
                     schedule=None, max_iterations: int = 100_000,
                     use_quantized: bool = False,
                     iterate_log: list | None = None
                     ) -> tuple[np.ndarray, SolveCertificate]:
    """PageRank with an arbitrary dangling distribution u.

    The full operator G^T + u d^T is applied on the fly (materializing it
    would densify every dangling column); the suitability result must
    certify that corrected operator.
    """
    v = np.asarray(v, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    d = _check_dangling_indicator(g, d)
    if u.min() < 0.0:
        raise ValueError("dangling distribution must be nonnegative")
    if alpha == 0.0:
        scores = v.copy()
        if iterate_log is not None:
            iterate_log.append(scores)
        return scores, _trivial_certificate(g.n, "direct")
    if alpha < 0.0 or alpha >= 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    _check_substochastic(g)
    _require_suitable(suit)
    if alpha * suit.sigma >= 1.0:
        raise ValueError(f"alpha {alpha} is not below 1/sigma = {1.0 / suit.sigma}")
    op = transpose(g)
    cfg = SorConfig(s=1.0 / alpha, sigma=suit.sigma, w=suit.w,
                    target_error=target_error, omega=omega,
                    max_iterations=max_iterations, use_quantized=use_quantized)
    schedule = Sequential() if schedule is None else schedule
    b = v * ((1.0 - alpha) / alpha)
    return solve(op, b, cfg, schedule, rank_one=(u, d),
                 iterate_log=iterate_log)


def pagerank_l1_bound(x_prev: np.ndarray, x_next: np.ndarray,
                      alpha: float) -> float:
    """alpha / (1 - alpha) times the l1 step difference.

    A valid l1 (hence sup-norm) error bound for plain Gauss-Seidel sweeps of
    the damped stochastic system; wasteful next to the weighted-norm
    certificate, but needs no weight vector at all.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    delta = np.asarray(x_next, dtype=np.float64) - np.asarray(x_prev, dtype=np.float64)
    return alpha / (1.0 - alpha) * float(np.sum(np.abs(delta)))
