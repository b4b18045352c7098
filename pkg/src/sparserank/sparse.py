"""Dual CSR storage for doubly sparse matrices and exact residual evaluation.

A row-stochastic P induces the operator A = P^T - I whose null vector on the
unit simplex is the stationary distribution of P. The solvers need O(s) access
to single rows AND single columns of A, so every matrix is stored twice: once
in CSR form and once as the CSR of its transpose. Memory doubles; per-iteration
cost drops from O(n) to O(s log n).

All values are double precision. Incremental bookkeeping downstream is only as
trustworthy as the honest recomputations done here, so spmv and the residuals
are deliberately plain O(nnz) passes with no shortcuts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

# Contiguous float64 vector of length n. Solvers keep x, b = Ax and the
# gradient image in this form.
DenseVector = np.ndarray

_DSM_MAGIC = b"DSM1"


@dataclass(eq=False)
class CsrMatrix:
    """One CSR form: row_start offsets, column indices, values."""

    n_rows: int
    n_cols: int
    row_start: np.ndarray  # int64, length n_rows + 1
    col_index: np.ndarray  # int64, length nnz
    value: np.ndarray  # float64, length nnz

    @property
    def nnz(self) -> int:
        return int(self.row_start[-1])

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row i (views, not copies)."""
        lo, hi = self.row_start[i], self.row_start[i + 1]
        return self.col_index[lo:hi], self.value[lo:hi]


@dataclass(eq=False)
class DualSparseMatrix:
    """The same matrix in CSR by rows and CSR by columns (the transpose).

    Immutable after build; safe to share across threads.
    """

    by_rows: CsrMatrix
    by_cols: CsrMatrix

    @property
    def n(self) -> int:
        if self.by_rows.n_rows != self.by_rows.n_cols:
            raise ValueError("matrix is not square")
        return self.by_rows.n_rows

    @property
    def shape(self) -> tuple[int, int]:
        return (self.by_rows.n_rows, self.by_rows.n_cols)

    @property
    def nnz(self) -> int:
        return self.by_rows.nnz


@dataclass
class SparsityStats:
    row_nnz_min: int
    row_nnz_max: int
    row_nnz_avg: float
    col_nnz_min: int
    col_nnz_max: int
    col_nnz_avg: float


def _csr_from_sorted(rows, cols, vals, n_rows: int, n_cols: int) -> CsrMatrix:
    # rows must already be sorted (stable within-row column order preserved).
    counts = np.bincount(rows, minlength=n_rows) if rows.size else np.zeros(n_rows, dtype=np.int64)
    row_start = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=row_start[1:])
    return CsrMatrix(
        n_rows,
        n_cols,
        row_start,
        np.ascontiguousarray(cols, dtype=np.int64),
        np.ascontiguousarray(vals, dtype=np.float64),
    )


def _transpose_csr(m: CsrMatrix) -> CsrMatrix:
    rows = np.repeat(np.arange(m.n_rows, dtype=np.int64), np.diff(m.row_start))
    order = np.argsort(m.col_index, kind="stable")
    return _csr_from_sorted(m.col_index[order], rows[order], m.value[order], m.n_cols, m.n_rows)


def _dual_from_arrays(rows, cols, vals, n_rows: int, n_cols: int, sum_duplicates: bool = False) -> DualSparseMatrix:
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
        raise ValueError("triplet arrays must be 1-d and of equal length")
    if rows.size:
        if rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols:
            bad = np.flatnonzero((rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols))[0]
            raise ValueError(f"index out of range: ({rows[bad]}, {cols[bad]}) for shape ({n_rows}, {n_cols})")
        if not np.isfinite(vals).all():
            raise ValueError("nonfinite value in triplets")
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size > 1:
        dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
        if dup.any():
            if sum_duplicates:
                starts = np.flatnonzero(np.concatenate(([True], ~dup)))
                vals = np.add.reduceat(vals, starts)
                rows, cols = rows[starts], cols[starts]
            else:
                k = np.flatnonzero(dup)[0]
                raise ValueError(f"duplicate entry at ({rows[k]}, {cols[k]})")
    keep = vals != 0.0
    if not keep.all():
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    by_rows = _csr_from_sorted(rows, cols, vals, n_rows, n_cols)
    return DualSparseMatrix(by_rows, _transpose_csr(by_rows))


def build_dual(triplets, n_rows: int, n_cols: int) -> DualSparseMatrix:
    """Build dual CSR storage from (row, col, value) triplets.

    Duplicate (row, col) pairs are an error; entries with value exactly 0 are
    dropped so that nnz reflects structural sparsity.
    """
    if len(triplets):
        arr = np.asarray(triplets, dtype=np.float64)
        rows, cols, vals = arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2]
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.float64)
    return _dual_from_arrays(rows, cols, vals, n_rows, n_cols)


def pagerank_operator(P: DualSparseMatrix) -> DualSparseMatrix:
    """A = P^T - I for a row-stochastic P.

    Column sums of A are 0 up to rounding (inherited from row sums of P) and
    every entry lies in [-1, 1].
    """
    n = P.n
    br = P.by_rows
    if br.value.size and br.value.min() < 0.0:
        raise ValueError("stochastic matrix must be entrywise nonnegative")
    row_ids = np.repeat(np.arange(n, dtype=np.int64), np.diff(br.row_start))
    sums = np.bincount(row_ids, weights=br.value, minlength=n)
    worst = np.abs(sums - 1.0).max(initial=0.0)
    if worst > 1e-12:
        raise ValueError(f"matrix is not row-stochastic (row sum off by {worst:.3e})")
    rows = np.concatenate([br.col_index, np.arange(n, dtype=np.int64)])
    cols = np.concatenate([row_ids, np.arange(n, dtype=np.int64)])
    vals = np.concatenate([br.value, np.full(n, -1.0)])
    A = _dual_from_arrays(rows, cols, vals, n, n, sum_duplicates=True)
    if A.by_rows.value.size and np.abs(A.by_rows.value).max() > 1.0 + 1e-12:
        raise ValueError("operator entry outside [-1, 1]")
    return A


@njit(cache=True, nogil=True)
def _matvec(row_start, col_index, value, x, out):
    for i in range(out.shape[0]):
        acc = 0.0
        for t in range(row_start[i], row_start[i + 1]):
            acc += value[t] * x[col_index[t]]
        out[i] = acc


def spmv(M: DualSparseMatrix, x: DenseVector) -> DenseVector:
    """Exact full product Mx via the by_rows form, O(nnz)."""
    br = M.by_rows
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (br.n_cols,):
        raise ValueError(f"dimension mismatch: matrix is {br.n_rows}x{br.n_cols}, x has length {x.shape}")
    out = np.empty(br.n_rows, dtype=np.float64)
    _matvec(br.row_start, br.col_index, br.value, x, out)
    return out


def spmv_t(M: DualSparseMatrix, y: DenseVector) -> DenseVector:
    """Exact M^T y via the by_cols form (same cost as spmv)."""
    bc = M.by_cols
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape != (bc.n_cols,):
        raise ValueError("dimension mismatch")
    out = np.empty(bc.n_rows, dtype=np.float64)
    _matvec(bc.row_start, bc.col_index, bc.value, y, out)
    return out


def residual_two(A: DualSparseMatrix, x: DenseVector) -> float:
    """The stopping functional: half the squared 2-norm of Ax, fresh."""
    b = spmv(A, x)
    return 0.5 * float(np.dot(b, b))


def residual_inf(A: DualSparseMatrix, x: DenseVector) -> float:
    b = spmv(A, x)
    return float(np.abs(b).max(initial=0.0))


def sparsity_stats(M: DualSparseMatrix) -> SparsityStats:
    """Nonzero counts per row and per column of whatever matrix is given."""
    row_counts = np.diff(M.by_rows.row_start)
    col_counts = np.diff(M.by_cols.row_start)

    def _mm(c):
        if c.size == 0:
            return 0, 0, 0.0
        return int(c.min()), int(c.max()), float(c.mean())

    rmin, rmax, ravg = _mm(row_counts)
    cmin, cmax, cavg = _mm(col_counts)
    return SparsityStats(rmin, rmax, ravg, cmin, cmax, cavg)


def save_dsm(M: DualSparseMatrix, path) -> None:
    """Write the by_rows form to the DSM1 binary format (little endian)."""
    br = M.by_rows
    with open(path, "wb") as f:
        f.write(_DSM_MAGIC)
        np.array([br.n_rows, br.n_cols, br.nnz], dtype="<u8").tofile(f)
        br.row_start.astype("<u8").tofile(f)
        br.col_index.astype("<u8").tofile(f)
        br.value.astype("<f8").tofile(f)


def load_dsm(path) -> DualSparseMatrix:
    """Read a DSM1 file; the by_cols form is rebuilt, round trip is byte-exact."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 + 3 * 8 or raw[:4] != _DSM_MAGIC:
        raise ValueError(f"{path}: not a DSM1 file")
    n_rows, n_cols, nnz = (int(v) for v in np.frombuffer(raw, dtype="<u8", count=3, offset=4))
    off = 4 + 3 * 8
    need = off + (n_rows + 1 + nnz) * 8 + nnz * 8
    if len(raw) != need:
        raise ValueError(f"{path}: truncated or oversized DSM1 payload")
    row_start = np.frombuffer(raw, dtype="<u8", count=n_rows + 1, offset=off).astype(np.int64)
    off += (n_rows + 1) * 8
    col_index = np.frombuffer(raw, dtype="<u8", count=nnz, offset=off).astype(np.int64)
    off += nnz * 8
    value = np.frombuffer(raw, dtype="<f8", count=nnz, offset=off).astype(np.float64)
    if row_start[0] != 0 or row_start[-1] != nnz or (np.diff(row_start) < 0).any():
        raise ValueError(f"{path}: corrupt row offsets")
    if nnz and (col_index.min() < 0 or col_index.max() >= n_cols):
        raise ValueError(f"{path}: column index out of range")
    by_rows = CsrMatrix(n_rows, n_cols, row_start, col_index, value)
    return DualSparseMatrix(by_rows, _transpose_csr(by_rows))
