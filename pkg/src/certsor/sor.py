"""Step-asynchronous SOR for (s*I - A) x = b with certified error bounds.

One iteration updates every component exactly once, in arbitrary order; each
read of another component may use either the previous iterate or the freshly
written value, as long as no value is read before it exists.  Under a
suitable weight vector (A w <= sigma w, s > sigma) every such iteration
contracts the weighted sup norm of the error by

    r = |1 - omega| + omega * max_k (sigma - a_kk) / (s - a_kk) < 1,

which yields the a-posteriori stopping bound
(r / (1 - r)) * ||x_next - x_prev|| in the same norm.  The bound never looks
at the residual, so nothing about (s*I - A)^-1 is ever needed.
"""

from __future__ import annotations

import heapq
import threading
from dataclasses import dataclass

import numpy as np

from . import kernels
from .norms import WeightVector, quantize, wnorm, wnorm_quantized
from .sparse import SparseMatrix, matvec


class SuitabilityError(ValueError):
    """The supplied weights do not certify the matrix for the given sigma."""


class TornReadError(RuntimeError):
    """A recorded parallel read matched neither the old nor the new value."""


# --------------------------------------------------------------------------
# update schedules


@dataclass(frozen=True, eq=False)
class Sequential:
    """Gauss-Seidel order: each component reads fresh values of everything
    updated before it.  ``permutation`` defaults to the identity."""

    permutation: np.ndarray | None = None

    @property
    def kind(self) -> str:
        return "seq"


@dataclass(frozen=True)
class Jacobi:
    """All components update simultaneously from the previous iterate."""

    @property
    def kind(self) -> str:
        return "jacobi"


@dataclass(frozen=True)
class RandomPreorder:
    """Adversarial simulated schedule: every iteration draws a random update
    order, random tie groups, and a random choice of stale reads among the
    already-updated components (including none or all of them)."""

    seed: int

    @property
    def kind(self) -> str:
        return f"random:{self.seed}"


@dataclass(frozen=True)
class ParallelBlocks:
    """Real threads over contiguous index blocks, one barrier per iteration.

    Reads of other components return whatever value is currently visible,
    which is exactly the one-step-staleness model the certificate covers.
    """

    workers: int

    @property
    def kind(self) -> str:
        return f"par:{self.workers}"


@dataclass(frozen=True, eq=False)
class ExplicitPreorder:
    """A fully materialized single-step plan: a processing order plus a
    per-entry choice between the fresh and the previous value."""

    order: np.ndarray
    fresh: np.ndarray

    @property
    def kind(self) -> str:
        return "explicit"


Schedule = Sequential | Jacobi | RandomPreorder | ParallelBlocks | ExplicitPreorder


def realize_plan(schedule, a: SparseMatrix, t: int) -> tuple[np.ndarray, np.ndarray]:
    """(processing order, per-entry fresh mask) for iteration ``t``.

    The fresh mask is True only for entries whose column is updated strictly
    earlier in the order, which is the compatibility constraint between the
    previous-value sets and the update preorder.
    """
    n = a.n
    rows = a.entry_rows()
    if isinstance(schedule, Jacobi):
        return np.arange(n, dtype=np.int64), np.zeros(a.nnz, dtype=bool)
    if isinstance(schedule, Sequential):
        if schedule.permutation is None:
            order = np.arange(n, dtype=np.int64)
            pos = order
        else:
            order = np.asarray(schedule.permutation, dtype=np.int64)
            if np.sort(order).tolist() != list(range(n)):
                raise ValueError("permutation must reorder 0..n-1")
            pos = np.empty(n, dtype=np.int64)
            pos[order] = np.arange(n, dtype=np.int64)
        return order, pos[a.col_indices] < pos[rows]
    if isinstance(schedule, RandomPreorder):
        rng = np.random.default_rng([schedule.seed, t])
        order = rng.permutation(n).astype(np.int64)
        if n > 1:
            split_p = rng.random()
            breaks = rng.random(n - 1) < split_p
            group_by_pos = np.concatenate(([0], np.cumsum(breaks)))
        else:
            group_by_pos = np.zeros(1, dtype=np.int64)
        group = np.empty(n, dtype=np.int64)
        group[order] = group_by_pos
        allowed = group[a.col_indices] < group[rows]
        stale_bias = rng.random()
        fresh = allowed & (rng.random(a.nnz) >= stale_bias)
        return order, fresh
    if isinstance(schedule, ExplicitPreorder):
        return (np.asarray(schedule.order, dtype=np.int64),
                np.asarray(schedule.fresh, dtype=bool))
    raise TypeError(f"no simulated plan for schedule {schedule!r}")


def validate_plan(a: SparseMatrix, order: np.ndarray, fresh: np.ndarray) -> bool:
    """True when every fresh read points at a strictly earlier component."""
    pos = np.empty(a.n, dtype=np.int64)
    pos[order] = np.arange(a.n, dtype=np.int64)
    rows = a.entry_rows()
    return bool(np.all(~fresh | (pos[a.col_indices] < pos[rows])))


# --------------------------------------------------------------------------
# contraction certificate


def _diag_ratio(diag: np.ndarray, s: float, sigma: float) -> float:
    if diag.size == 0:
        raise ValueError("empty system")
    if s <= sigma:
        raise ValueError(f"need s > sigma, got s={s}, sigma={sigma}")
    if float(diag.max()) >= sigma:
        raise SuitabilityError(
            f"diagonal entry {diag.max()} >= sigma {sigma}: no weight vector "
            "can certify that row")
    return float(np.max((sigma - diag) / (s - diag)))


def omega_max(diag: np.ndarray, s: float, sigma: float) -> float:
    """Upper end of the convergent relaxation range, always in (1, 2)."""
    diag = np.asarray(diag, dtype=np.float64)
    return 2.0 / (1.0 + _diag_ratio(diag, s, sigma))


def contraction_factor(diag: np.ndarray, s: float, sigma: float,
                       omega: float) -> float:
    """Per-iteration error contraction in the weighted sup norm."""
    diag = np.asarray(diag, dtype=np.float64)
    ratio = _diag_ratio(diag, s, sigma)
    w_max = 2.0 / (1.0 + ratio)
    if not 0.0 < omega < w_max:
        raise ValueError(f"omega {omega} outside the convergent range (0, {w_max})")
    return abs(1.0 - omega) + omega * ratio


# --------------------------------------------------------------------------
# configuration and certificates


@dataclass(frozen=True)
class SorConfig:
    """Solver parameters.  ``target_error`` is a sup-norm tolerance; with
    sup-normalized weights the weighted-norm bound dominates the sup norm, so
    it is compared against the target directly."""

    s: float
    sigma: float
    w: WeightVector
    target_error: float
    omega: float = 1.0
    max_iterations: int = 50_000
    use_quantized: bool = False

    def __post_init__(self):
        if self.sigma <= 0.0 or self.s <= self.sigma:
            raise ValueError("need s > sigma > 0")
        if self.target_error <= 0.0:
            raise ValueError("target_error must be positive")
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class SolveCertificate:
    """Machine-checkable record of what the returned iterate guarantees.

    ``wnorm_bound`` bounds the weighted sup norm of the absolute error;
    ``supnorm_bound`` is its plain sup-norm consequence.  ``certified`` is
    False when the iteration cap was reached before the target, in which
    case the bounds describe the best effort, not the request.
    """

    r: float
    omega: float
    s: float
    sigma: float
    iterations: int
    wnorm_bound: float
    supnorm_bound: float
    schedule: str
    quantized: bool
    omega_max: float
    certified: bool
    last_step_supnorm: float
    pseudorank_l1: float | None = None

    def to_json_dict(self, manifest: str | None = None) -> dict:
        doc = {
            "r": self.r,
            "omega": self.omega,
            "s": self.s,
            "sigma": self.sigma,
            "iterations": self.iterations,
            "wnorm_bound": self.wnorm_bound,
            "supnorm_bound": self.supnorm_bound,
            "schedule": self.schedule,
            "quantized": self.quantized,
            "omega_max": self.omega_max,
            "certified": self.certified,
            "last_step_supnorm": self.last_step_supnorm,
        }
        if self.pseudorank_l1 is not None:
            doc["pseudorank_l1"] = self.pseudorank_l1
        if manifest is not None:
            doc["manifest"] = manifest
        return doc


# --------------------------------------------------------------------------
# stepping


def _effective_parts(a, b, x, rank_one):
    """Diagonal and right-hand side of the step, with the dangling rank-one
    correction folded in against the previous iterate.

    The rank-one columns are structurally empty in the sparse part, so
    treating them as stale reads is a legal previous-value choice and the
    contraction certificate applies to the corrected operator unchanged.
    """
    if rank_one is None:
        return a.diag, b
    u, d = rank_one
    mass = float(d @ x)
    extra = u * (mass - d * x)
    return a.diag + u * d, b + extra


def parallel_step(a: SparseMatrix, b: np.ndarray, x: np.ndarray,
                  omega: float, s: float, workers: int, *,
                  rank_one=None, record: bool = False):
    """One real-thread iteration; returns (new iterate, read log or None).

    Each worker owns a contiguous block and is the only writer of its
    components; reads go straight to the shared vector, so their freshness
    is decided by the actual interleaving.
    """
    diag, b_eff = _effective_parts(a, b, x, rank_one)
    xold = np.ascontiguousarray(x, dtype=np.float64)
    xwork = xold.copy()
    blocks = [blk for blk in
              np.array_split(np.arange(a.n, dtype=np.int64),
                             max(1, min(workers, a.n)))
              if blk.size]
    read_log = np.full(a.nnz, np.nan) if record else None

    def run(rows):
        if record:
            kernels.sor_block_recording(a.row_offsets, a.col_indices, a.values,
                                        diag, b_eff, xold, xwork, rows, omega,
                                        s, read_log)
        else:
            kernels.sor_block(a.row_offsets, a.col_indices, a.values, diag,
                              b_eff, xold, xwork, rows, omega, s)

    if len(blocks) == 1:
        run(blocks[0])
    else:
        threads = [threading.Thread(target=run, args=(blk,)) for blk in blocks]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    return xwork, read_log


def sor_step(a: SparseMatrix, b: np.ndarray, x: np.ndarray, cfg: SorConfig,
             schedule, t: int, *, rank_one=None) -> np.ndarray:
    """One full update of every component under the given schedule."""
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if b.shape != (a.n,) or x.shape != (a.n,):
        raise ValueError("dimension mismatch")
    diag, b_eff = _effective_parts(a, b, x, rank_one)
    # Validates omega against the convergent range and rejects s <= diag.
    contraction_factor(diag, cfg.s, cfg.sigma, cfg.omega)
    if isinstance(schedule, ParallelBlocks):
        xnew, _ = parallel_step(a, b, x, cfg.omega, cfg.s, schedule.workers,
                                rank_one=rank_one)
        return xnew
    order, fresh = realize_plan(schedule, a, t)
    xnew = x.copy()
    kernels.sor_sweep(a.row_offsets, a.col_indices, a.values, diag, b_eff,
                      x, xnew, order, fresh, cfg.omega, cfg.s)
    return xnew


def solve(a: SparseMatrix, b: np.ndarray, cfg: SorConfig, schedule, *,
          x0: np.ndarray | None = None, rank_one=None,
          iterate_log: list | None = None) -> tuple[np.ndarray, SolveCertificate]:
    """Iterate until (r / (1 - r)) * ||step difference|| meets the target.

    The stopping norm is the weighted sup norm (or its byte-quantized upper
    bound when ``cfg.use_quantized``), never the residual.  On hitting the
    iteration cap the best iterate is returned with ``certified=False``.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (a.n,):
        raise ValueError("right-hand side length mismatch")
    if cfg.w.n != a.n:
        raise ValueError("weight length mismatch")
    w = cfg.w.w
    if rank_one is None:
        ratios = matvec(a, w) / w
    else:
        u, d = rank_one
        ratios = (matvec(a, w) + u * float(d @ w)) / w
    max_ratio = float(ratios.max())
    if not max_ratio <= cfg.sigma:
        raise SuitabilityError(
            f"weights violate A w <= sigma w (max ratio {max_ratio} > "
            f"sigma {cfg.sigma})")
    diag = a.diag if rank_one is None else a.diag + rank_one[0] * rank_one[1]
    r = contraction_factor(diag, cfg.s, cfg.sigma, cfg.omega)
    om_max = omega_max(diag, cfg.s, cfg.sigma)
    factor = r / (1.0 - r)
    q = quantize(cfg.w) if cfg.use_quantized else None

    x = np.zeros(a.n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    plan = None
    if isinstance(schedule, (Sequential, Jacobi, ExplicitPreorder)):
        plan = realize_plan(schedule, a, 0)
    certified = False
    dnorm = np.inf
    delta_sup = np.inf
    iterations = 0
    for t in range(cfg.max_iterations):
        if isinstance(schedule, ParallelBlocks):
            xnext, _ = parallel_step(a, b, x, cfg.omega, cfg.s,
                                     schedule.workers, rank_one=rank_one)
        else:
            diag_eff, b_eff = _effective_parts(a, b, x, rank_one)
            order, fresh = plan if plan is not None else realize_plan(schedule, a, t)
            xnext = x.copy()
            kernels.sor_sweep(a.row_offsets, a.col_indices, a.values, diag_eff,
                              b_eff, x, xnext, order, fresh, cfg.omega, cfg.s)
        delta = xnext - x
        dnorm = wnorm_quantized(delta, q) if q is not None else wnorm(delta, cfg.w)
        delta_sup = float(np.max(np.abs(delta)))
        x = xnext
        iterations = t + 1
        if iterate_log is not None:
            iterate_log.append(xnext)
        if factor * dnorm <= cfg.target_error:
            certified = True
            break
    bound = factor * dnorm
    cert = SolveCertificate(
        r=r, omega=cfg.omega, s=cfg.s, sigma=cfg.sigma, iterations=iterations,
        wnorm_bound=bound, supnorm_bound=bound * float(w.max()),
        schedule=schedule.kind, quantized=cfg.use_quantized, omega_max=om_max,
        certified=certified, last_step_supnorm=delta_sup)
    return x, cert


def certified_sup_bound(cert: SolveCertificate, weights: WeightVector) -> float:
    """The cruder sup-norm bound that never touches the weighted norm: the
    plain sup-norm step difference inflated by max(w)/min(w).  Reported only
    to show how much the weighted route saves."""
    spread = float(weights.w.max() / weights.w.min())
    return spread * (cert.r / (1.0 - cert.r)) * cert.last_step_supnorm


# --------------------------------------------------------------------------
# reconstruction of parallel realizations


def reconstruct_plan(a: SparseMatrix, xold: np.ndarray, xnew: np.ndarray,
                     read_log: np.ndarray) -> ExplicitPreorder:
    """Rebuild a simulated plan that replays a recorded parallel iteration.

    Any read that observed a freshly written value forces its column before
    its row in the update order; those constraints are acyclic because real
    time orders the writes, so a topological order (smallest index first)
    together with the observed per-read freshness replays the iteration
    exactly.
    """
    rows = a.entry_rows()
    cols = a.col_indices
    olds = xold[cols]
    news = xnew[cols]
    diag_entries = rows == cols
    eq_old = read_log == olds
    eq_new = read_log == news
    bad = ~(diag_entries | eq_old | eq_new)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise TornReadError(
            f"entry {k} read {read_log[k]!r}, expected {olds[k]!r} or {news[k]!r}")
    fresh = eq_new & ~eq_old & ~diag_entries
    succ = [[] for _ in range(a.n)]
    indeg = np.zeros(a.n, dtype=np.int64)
    for k in np.flatnonzero(fresh):
        succ[int(cols[k])].append(int(rows[k]))
        indeg[rows[k]] += 1
    heap = [i for i in range(a.n) if indeg[i] == 0]
    heapq.heapify(heap)
    order = np.empty(a.n, dtype=np.int64)
    filled = 0
    while heap:
        i = heapq.heappop(heap)
        order[filled] = i
        filled += 1
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, j)
    if filled != a.n:
        raise TornReadError("fresh-read constraints contain a cycle")
    return ExplicitPreorder(order=order, fresh=fresh)
