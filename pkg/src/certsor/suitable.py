"""Constructive computation of suitable weight vectors.

For a nonnegative A and sigma above the spectral radius, iterating
z = A w; w <- z / sigma + 1 from w = 1 reaches, in finitely many steps, a
strictly positive w with A @ w <= sigma * w.  The loop below runs the
sup-normalized variant of that recurrence, tracks the running scale of the
normalization, and brackets the spectral radius with the min/max ratios
(A w)_i / w_i, both of which are valid bounds without any irreducibility
assumption.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .norms import WeightVector, check_suitable
from .sparse import matvec

# Smallest positive normal double; stopping here (rather than at the
# subnormal limit) avoids gradual-underflow precision traps in the scale.
SCALE_FLOOR = float(np.finfo(np.float64).tiny)


class SuitableStatus(enum.Enum):
    SUITABLE = "suitable"
    SIGMA_BELOW_RHO = "sigma_below_rho"
    UNDERFLOW = "underflow"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class SuitableResult:
    """Outcome of the suitable-vector iteration.

    ``iterations`` counts matrix products.  ``scale`` is the final value of
    the running normalization factor (it decays to zero exactly when sigma
    is at or below the spectral radius).  ``collatz_history`` records one
    (lower, upper) spectral-radius bracket per product.
    """

    status: SuitableStatus
    sigma: float
    iterations: int
    scale: float
    w: WeightVector | None = None
    collatz_history: list[tuple[float, float]] = field(default_factory=list)

    def to_json_dict(self, w_path: str | None = None) -> dict:
        return {
            "status": self.status.value,
            "sigma": self.sigma,
            "iterations": self.iterations,
            "scale": self.scale,
            "w": w_path,
            "collatz_history": [list(pair) for pair in self.collatz_history],
        }


def collatz_bounds(a, weights: WeightVector) -> tuple[float, float]:
    """(min, max) of (A w)_i / w_i: a two-sided spectral-radius bracket.

    Both sides hold for any nonnegative A and strictly positive w; no
    irreducibility is needed.  A null row pins the lower bound at zero.
    """
    ratios = matvec(a, weights.w) / weights.w
    return float(ratios.min()), float(ratios.max())


def compute_suitable(a, sigma: float, *, max_iterations: int | None = None,
                     record_history: bool = True) -> SuitableResult:
    """Run the normalized suitable-vector iteration until certification.

    Stops SUITABLE as soon as max_i z_i / w_i <= sigma with z = A w, then
    re-verifies the candidate with an independent suitability check so a
    rounding quirk inside the loop can never produce an unsound result.
    Stops SIGMA_BELOW_RHO when min_i z_i / w_i > sigma (the lower bracket
    has crossed sigma), UNDERFLOW when the running scale drops below the
    smallest positive normal double, and ITERATION_LIMIT at the cap.
    """
    if a.n == 0:
        raise ValueError("empty matrix")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if max_iterations is None:
        # No a-priori bound on the number of steps exists; the cap turns
        # nontermination into an explicit status.
        max_iterations = 10 * a.n + 1000
    w = np.ones(a.n)
    scale = 1.0
    history: list[tuple[float, float]] = []
    iterations = 0
    while iterations < max_iterations:
        z = matvec(a, w)
        iterations += 1
        ratios = z / w
        lower = float(ratios.min())
        upper = float(ratios.max())
        if record_history:
            history.append((lower, upper))
        if upper <= sigma:
            weights = WeightVector(w, normalized=bool(w.max() == 1.0))
            verdict = check_suitable(a, weights, sigma)
            if not verdict.suitable:
                raise AssertionError(
                    "stop rule accepted a vector the independent check rejects")
            return SuitableResult(SuitableStatus.SUITABLE, sigma, iterations,
                                  scale, weights, history)
        if lower > sigma:
            return SuitableResult(SuitableStatus.SIGMA_BELOW_RHO, sigma,
                                  iterations, scale, None, history)
        u = z / sigma + scale
        norm = float(u.max())
        scale = scale / norm
        w = u / norm
        if scale < SCALE_FLOOR:
            return SuitableResult(SuitableStatus.UNDERFLOW, sigma, iterations,
                                  scale, None, history)
    return SuitableResult(SuitableStatus.ITERATION_LIMIT, sigma, iterations,
                          scale, None, history)


def spectral_radius_bracket(a, iterations: int) -> tuple[float, float]:
    """Tightest (lower, upper) spectral-radius bracket seen along the
    normalized iteration; both sides stay valid at every step."""
    if iterations < 1:
        raise ValueError("need at least one iteration")
    if a.n == 0:
        raise ValueError("empty matrix")
    w = np.ones(a.n)
    scale = 1.0
    best_lower = 0.0
    best_upper = np.inf
    for _ in range(iterations):
        z = matvec(a, w)
        ratios = z / w
        best_lower = max(best_lower, float(ratios.min()))
        best_upper = min(best_upper, float(ratios.max()))
        if best_upper <= 0.0:
            # Every ratio vanished: the matrix is nilpotent along this
            # trajectory and the radius is exactly zero.
            return 0.0, 0.0
        u = z / best_upper + scale
        norm = float(u.max())
        scale = scale / norm
        w = u / norm
        if scale < SCALE_FLOOR or best_lower == best_upper:
            break
    return best_lower, best_upper
