"""Row-compressed nonnegative square matrices, edge-list ingestion and the
matrix-vector kernels the solver is built on.

Matrices are immutable after construction (the backing arrays are marked
read-only), so they can be shared freely across worker threads.  All row
sums are accumulated sequentially in ascending column order, which keeps
every downstream certificate bit-reproducible from run to run.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels

CACHE_MAGIC = b"CSOR1"


class EdgeListFormatError(ValueError):
    """Malformed or negative-weight line in an edge-list stream."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CacheFormatError(ValueError):
    """Binary cache does not match the documented layout."""


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Nonnegative square matrix in CSR form with dense diagonal access.

    ``diag[i]`` always equals the (i, i) entry, zero when it is structurally
    absent; the solver divides by ``s - diag[i]`` for every row, so diagonal
    access must be O(1) even when the diagonal is not stored.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    diag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets",
                           np.ascontiguousarray(self.row_offsets, dtype=np.int64))
        object.__setattr__(self, "col_indices",
                           np.ascontiguousarray(self.col_indices, dtype=np.int64))
        object.__setattr__(self, "values",
                           np.ascontiguousarray(self.values, dtype=np.float64))
        object.__setattr__(self, "diag",
                           np.ascontiguousarray(self.diag, dtype=np.float64))
        self._validate()
        for arr in (self.row_offsets, self.col_indices, self.values, self.diag):
            arr.flags.writeable = False

    def _validate(self):
        n = self.n
        if n < 0:
            raise ValueError("dimension must be nonnegative")
        if self.row_offsets.shape != (n + 1,):
            raise ValueError("row_offsets must have length n + 1")
        if self.row_offsets[0] != 0 or np.any(np.diff(self.row_offsets) < 0):
            raise ValueError("row_offsets must start at 0 and be nondecreasing")
        nnz = int(self.row_offsets[-1])
        if self.col_indices.shape != (nnz,) or self.values.shape != (nnz,):
            raise ValueError("col_indices/values length must match row_offsets[-1]")
        if self.diag.shape != (n,):
            raise ValueError("diag must have length n")
        if nnz:
            if self.col_indices.min() < 0 or self.col_indices.max() >= n:
                raise ValueError("column index out of range")
            if not np.all(np.isfinite(self.values)) or self.values.min() < 0.0:
                raise ValueError("values must be finite and nonnegative")
        if not np.all(np.isfinite(self.diag)) or (n and self.diag.min() < 0.0):
            raise ValueError("diag must be finite and nonnegative")
        # Ascending, duplicate-free columns within each row make the
        # summation order well defined.
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.row_offsets))
        if nnz > 1:
            same_row = rows[1:] == rows[:-1]
            if np.any(same_row & (np.diff(self.col_indices) <= 0)):
                raise ValueError("columns must be strictly ascending within a row")
        stored_diag = np.zeros(n)
        on_diag = rows == self.col_indices
        stored_diag[self.col_indices[on_diag]] = self.values[on_diag]
        if not np.array_equal(stored_diag, self.diag):
            raise ValueError("diag array inconsistent with stored entries")

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    def entry_rows(self) -> np.ndarray:
        """Row index of every stored entry, in storage order."""
        return np.repeat(np.arange(self.n, dtype=np.int64),
                         np.diff(self.row_offsets))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return matvec(self, x)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n, self.n))
        rows = self.entry_rows()
        dense[rows, self.col_indices] = self.values
        return dense


@dataclass(frozen=True)
class GraphIngestSummary:
    node_count: int
    arc_count: int
    dangling_count: int
    transposed: bool = False


def from_coo(n, rows, cols, vals) -> SparseMatrix:
    """Build a matrix from triplets; duplicate entries sum, exact zeros drop."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if rows.size:
        if rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n:
            raise ValueError("triplet index out of range")
        if not np.all(np.isfinite(vals)) or vals.min() < 0.0:
            raise ValueError("triplet values must be finite and nonnegative")
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        head = np.ones(rows.size, dtype=bool)
        head[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(head)
        vals = np.add.reduceat(vals, starts)
        rows, cols = rows[starts], cols[starts]
    diag = np.zeros(n)
    on_diag = rows == cols
    diag[rows[on_diag]] = vals[on_diag]
    keep = vals != 0.0
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
    return SparseMatrix(n, offsets, cols, vals, diag)


def load_edge_list(source, *, transpose: bool = False,
                   default_weight: float = 1.0) -> SparseMatrix:
    """Parse "u v [w]" lines into a matrix with entry (u, v) = w.

    Duplicate arcs sum.  Lines starting with '#' and blank lines are
    ignored.  With ``transpose`` the entry is stored at (v, u) instead.
    The dimension is one plus the largest node id seen.
    """
    close = False
    if isinstance(source, (str, Path)):
        source = open(source, "rb")
        close = True
    try:
        heads, tails, weights = [], [], []
        max_id = -1
        for line_no, raw in enumerate(source, start=1):
            if isinstance(raw, bytes):
                try:
                    line = raw.decode("ascii")
                except UnicodeDecodeError:
                    raise EdgeListFormatError(line_no, "non-ASCII bytes")
            else:
                line = raw
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) not in (2, 3):
                raise EdgeListFormatError(
                    line_no, f"expected 'u v' or 'u v w', got {len(parts)} fields")
            try:
                u = int(parts[0])
                v = int(parts[1])
            except ValueError:
                raise EdgeListFormatError(line_no, "node ids must be integers")
            if u < 0 or v < 0:
                raise EdgeListFormatError(line_no, "node ids must be nonnegative")
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise EdgeListFormatError(line_no, "weight is not a number")
                if not np.isfinite(w):
                    raise EdgeListFormatError(line_no, "weight must be finite")
                if w < 0.0:
                    raise EdgeListFormatError(line_no, f"negative weight {w}")
            else:
                w = default_weight
            max_id = max(max_id, u, v)
            if transpose:
                u, v = v, u
            heads.append(u)
            tails.append(v)
            weights.append(w)
    finally:
        if close:
            source.close()
    n = max_id + 1
    return from_coo(n, heads, tails, weights)


def ingest_summary(a: SparseMatrix, transposed: bool = False) -> GraphIngestSummary:
    degrees = np.diff(a.row_offsets)
    return GraphIngestSummary(node_count=a.n, arc_count=a.nnz,
                              dangling_count=int(np.count_nonzero(degrees == 0)),
                              transposed=transposed)


def matvec(a, x: np.ndarray) -> np.ndarray:
    """Sparse product A @ x with a fixed, ascending-column summation order.

    ``a`` may be a :class:`SparseMatrix` or any operator exposing ``n`` and a
    ``matvec`` method (used for rank-one corrected operators).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n,):
        raise ValueError(f"vector length {x.shape} does not match dimension {a.n}")
    if not isinstance(a, SparseMatrix):
        return a.matvec(x)
    out = np.empty(a.n)
    kernels.csr_matvec(a.row_offsets, a.col_indices, a.values, x, out)
    return out


def row_sums(a: SparseMatrix) -> np.ndarray:
    rows = a.entry_rows()
    return np.bincount(rows, weights=a.values, minlength=a.n)


def row_normalize(a: SparseMatrix) -> tuple[SparseMatrix, np.ndarray]:
    """Scale every nonnull row to unit l1 mass; flag null rows.

    Returns the normalized matrix and the indicator vector d with d[i] = 1
    exactly when row i has no stored entries.
    """
    sums = row_sums(a)
    dangling = (sums == 0.0).astype(np.float64)
    safe = np.where(sums > 0.0, sums, 1.0)
    rows = a.entry_rows()
    values = a.values / safe[rows]
    diag = a.diag / safe
    g = SparseMatrix(a.n, a.row_offsets, a.col_indices, values, diag)
    return g, dangling


def transpose(a: SparseMatrix) -> SparseMatrix:
    """Exact structural transpose (CSR -> CSR)."""
    rows = a.entry_rows()
    order = np.argsort(a.col_indices, kind="stable")
    new_rows = a.col_indices[order]
    new_cols = rows[order]
    new_vals = a.values[order]
    offsets = np.zeros(a.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(new_rows, minlength=a.n), out=offsets[1:])
    return SparseMatrix(a.n, offsets, new_cols, new_vals, a.diag)


def write_cache(a: SparseMatrix, path) -> None:
    """Binary cache: magic, n, nnz (u64 LE), then offsets/cols (i64 LE),
    values and diag (f64 LE)."""
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<QQ", a.n, a.nnz))
        fh.write(a.row_offsets.astype("<i8").tobytes())
        fh.write(a.col_indices.astype("<i8").tobytes())
        fh.write(a.values.astype("<f8").tobytes())
        fh.write(a.diag.astype("<f8").tobytes())


def read_cache(path) -> SparseMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(len(CACHE_MAGIC))
        if magic != CACHE_MAGIC:
            raise CacheFormatError(f"bad magic {magic!r}, expected {CACHE_MAGIC!r}")
        header = fh.read(16)
        if len(header) != 16:
            raise CacheFormatError("truncated header")
        n, nnz = struct.unpack("<QQ", header)
        def take(count, dtype):
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise CacheFormatError("truncated body")
            return np.frombuffer(raw, dtype=dtype).copy()
        offsets = take(n + 1, "<i8")
        cols = take(nnz, "<i8")
        values = take(nnz, "<f8")
        diag = take(n, "<f8")
        if fh.read(1):
            raise CacheFormatError("trailing bytes after diag block")
    return SparseMatrix(int(n), offsets, cols, values, diag)
