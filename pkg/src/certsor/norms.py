"""Weighted supremum norms, suitability checks and the byte-per-entry
power-of-two weight approximation used for cheap certified stopping.

A strictly positive vector w with A @ w <= sigma * w (elementwise) induces
the norm max_i |x_i| / w_i in which the solver provably contracts; the
quantized form stores ceil(-log2 w_i) in one byte so the norm evaluation
only multiplies by powers of two, which is exact in binary floating point.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .sparse import CacheFormatError, matvec

QUANTIZED_MAGIC = b"CSORQ"
MAX_EXPONENT = 255


class QuantizationRangeError(ValueError):
    """Some weight is below 2**-255 and cannot be tracked in one byte.

    Callers must fall back to the full-precision weights: silently clamping
    would still give a valid upper bound, but one inflated by up to 2**255,
    which makes the certificate useless.
    """


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Strictly positive weights; ``normalized`` asserts max weight == 1."""

    w: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "w", np.ascontiguousarray(self.w, dtype=np.float64))
        if self.w.ndim != 1 or self.w.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if not np.all(np.isfinite(self.w)) or self.w.min() <= 0.0:
            raise ValueError("weights must be finite and strictly positive")
        if self.normalized and self.w.max() != 1.0:
            raise ValueError("normalized flag set but max weight != 1")
        self.w.flags.writeable = False

    @property
    def n(self) -> int:
        return self.w.size


def normalize_weights(w: np.ndarray) -> WeightVector:
    """Scale so the largest weight is exactly 1 (x / max(x) == 1 in IEEE)."""
    w = np.asarray(w, dtype=np.float64)
    return WeightVector(w / w.max(), normalized=True)


@dataclass(frozen=True)
class SuitabilityCheck:
    suitable: bool
    max_ratio: float
    witness_index: int


def wnorm(x: np.ndarray, weights: WeightVector) -> float:
    """max_i |x_i| / w_i; zero for the zero vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != weights.w.shape:
        raise ValueError("vector/weight length mismatch")
    return float(np.max(np.abs(x) / weights.w))


def check_suitable(a, weights: WeightVector, sigma: float) -> SuitabilityCheck:
    """Decide A @ w <= sigma * w by exact float comparison of the ratios.

    Ratios are computed by division rather than through logarithms so the
    verdict is exact in the float model; the witness index attains the
    maximum ratio.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    ratios = matvec(a, weights.w) / weights.w
    witness = int(np.argmax(ratios))
    max_ratio = float(ratios[witness])
    return SuitabilityCheck(suitable=max_ratio <= sigma, max_ratio=max_ratio,
                            witness_index=witness)


@dataclass(frozen=True, eq=False)
class QuantizedWeights:
    """One byte per weight: exponents[i] = ceil(-log2 w_i), in [0, 255]."""

    exponents: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "exponents",
                           np.ascontiguousarray(self.exponents, dtype=np.uint8))
        self.exponents.flags.writeable = False

    @property
    def n(self) -> int:
        return self.exponents.size

    def dequantize(self) -> np.ndarray:
        """The represented under-approximation w' with w'_i = 2**-exponents[i]."""
        return np.ldexp(1.0, -self.exponents.astype(np.int64))


def quantize(weights: WeightVector) -> QuantizedWeights:
    """Byte-quantized under-approximation w' <= w < 2 w' of normalized weights.

    ceil(-log2 w) is derived from the exact binary exponent (frexp), never
    from a rounded logarithm, so the sandwich holds entry for entry.
    """
    if not weights.normalized:
        raise ValueError("quantization requires sup-normalized weights")
    mantissa, exponent = np.frexp(weights.w)
    # w = m * 2**e with m in [0.5, 1), hence ceil(-log2 w) == 1 - e exactly.
    exps = 1 - exponent.astype(np.int64)
    if exps.min() < 0:
        raise ValueError("weights above 1 cannot appear in a normalized vector")
    if exps.max() > MAX_EXPONENT:
        raise QuantizationRangeError(
            f"smallest weight {weights.w.min():.3e} is below 2**-{MAX_EXPONENT}")
    return QuantizedWeights(exps.astype(np.uint8))


def wnorm_quantized(x: np.ndarray, q: QuantizedWeights) -> float:
    """max_i |x_i| * 2**exponents[i]; dominates the full-precision norm."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != q.exponents.shape:
        raise ValueError("vector/quantized-weight length mismatch")
    return float(np.max(np.ldexp(np.abs(x), q.exponents.astype(np.int64))))


def write_quantized(q: QuantizedWeights, path) -> None:
    with open(path, "wb") as fh:
        fh.write(QUANTIZED_MAGIC)
        fh.write(struct.pack("<Q", q.n))
        fh.write(q.exponents.tobytes())


def read_quantized(path) -> QuantizedWeights:
    with open(path, "rb") as fh:
        magic = fh.read(len(QUANTIZED_MAGIC))
        if magic != QUANTIZED_MAGIC:
            raise CacheFormatError(f"bad magic {magic!r}, expected {QUANTIZED_MAGIC!r}")
        (n,) = struct.unpack("<Q", fh.read(8))
        raw = fh.read(n)
        if len(raw) != n or fh.read(1):
            raise CacheFormatError("quantized payload length mismatch")
    return QuantizedWeights(np.frombuffer(raw, dtype=np.uint8).copy())
