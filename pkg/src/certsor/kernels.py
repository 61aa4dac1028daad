"""Compiled inner loops shared by the solver, the matrix kernels and the
rank-correlation counter.

Every kernel accumulates row sums sequentially in ascending column order and
is compiled without fastmath, so results are bit-reproducible and identical
to a straightforward interpreted loop over the same entries.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def csr_matvec(row_offsets, col_indices, values, x, out):
    n = row_offsets.size - 1
    for i in range(n):
        acc = 0.0
        for k in range(row_offsets[i], row_offsets[i + 1]):
            acc += values[k] * x[col_indices[k]]
        out[i] = acc
    return out


@njit(cache=True)
def sor_sweep(row_offsets, col_indices, values, diag, b, xold, xnew,
              order, fresh, omega, s):
    """One full update sweep in the given processing order.

    ``fresh[k]`` selects, per stored entry, whether the column value is read
    from the partially updated vector or from the previous iterate.  The
    caller guarantees that a fresh entry's column has already been processed.
    The diagonal entry is never part of the row sum.
    """
    for p in range(order.size):
        i = order[p]
        acc = 0.0
        for k in range(row_offsets[i], row_offsets[i + 1]):
            j = col_indices[k]
            if j == i:
                continue
            if fresh[k]:
                acc += values[k] * xnew[j]
            else:
                acc += values[k] * xold[j]
        xnew[i] = (1.0 - omega) * xold[i] + omega * (b[i] + acc) / (s - diag[i])
    return xnew


@njit(cache=True, nogil=True)
def sor_block(row_offsets, col_indices, values, diag, b, xold, xwork, rows,
              omega, s):
    """Update one contiguous block of components against a live shared vector.

    Reads of ``xwork`` race with writes from other workers; a read observes
    either the previous or the already-updated value of a component (64-bit
    aligned loads and stores do not tear on the supported targets).
    """
    for p in range(rows.size):
        i = rows[p]
        acc = 0.0
        for k in range(row_offsets[i], row_offsets[i + 1]):
            j = col_indices[k]
            if j == i:
                continue
            acc += values[k] * xwork[j]
        xwork[i] = (1.0 - omega) * xold[i] + omega * (b[i] + acc) / (s - diag[i])


@njit(cache=True, nogil=True)
def sor_block_recording(row_offsets, col_indices, values, diag, b, xold,
                        xwork, rows, omega, s, read_log):
    """Same as :func:`sor_block` but logs every value read from ``xwork``."""
    for p in range(rows.size):
        i = rows[p]
        acc = 0.0
        for k in range(row_offsets[i], row_offsets[i + 1]):
            j = col_indices[k]
            if j == i:
                continue
            xj = xwork[j]
            read_log[k] = xj
            acc += values[k] * xj
        xwork[i] = (1.0 - omega) * xold[i] + omega * (b[i] + acc) / (s - diag[i])


@njit(cache=True)
def merge_count_inversions(a):
    """Number of strict inversions (i < j with a[i] > a[j]) via merge sort."""
    n = a.size
    arr = a.copy()
    buf = np.empty(n, dtype=arr.dtype)
    count = np.int64(0)
    width = 1
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid >= n:
                break
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if arr[j] < arr[i]:
                    count += mid - i
                    buf[k] = arr[j]
                    j += 1
                else:
                    buf[k] = arr[i]
                    i += 1
                k += 1
            while i < mid:
                buf[k] = arr[i]
                i += 1
                k += 1
            while j < hi:
                buf[k] = arr[j]
                j += 1
                k += 1
            arr[lo:hi] = buf[lo:hi]
            lo += 2 * width
        width *= 2
    return count
