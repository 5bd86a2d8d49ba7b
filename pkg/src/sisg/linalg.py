"""Compressed sparse row matrices and Jacobi-preconditioned conjugate gradients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    n: int

    @property
    def nnz(self) -> int:
        return len(self.data)

    def _rows(self):
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.bincount(self._rows(), weights=self.data * x[self.indices], minlength=self.n)

    __matmul__ = matvec

    def diagonal(self) -> np.ndarray:
        rows = self._rows()
        on = rows == self.indices
        d = np.zeros(self.n)
        d[rows[on]] = self.data[on]
        return d

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        A[self._rows(), self.indices] = self.data
        return A

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def submatrix(self, rows, cols) -> "SparseMatrix":
        """Square block A[rows][:, cols]; ``rows`` and ``cols`` must have equal length."""
        sub = self.to_scipy()[rows][:, cols].tocsr()
        sub.sort_indices()
        return SparseMatrix(sub.indptr.astype(np.int64), sub.indices.astype(np.int64),
                            sub.data.copy(), sub.shape[0])

    def is_symmetric(self, rtol=1e-12) -> bool:
        A = self.to_scipy()
        diff = abs(A - A.T)
        scale = abs(A).max() if self.nnz else 0.0
        return diff.nnz == 0 or diff.max() <= rtol * scale


def assemble(n: int, rows, cols, values) -> SparseMatrix:
    """Build an ``n`` by ``n`` CSR matrix from triplets, summing duplicates.

    Duplicates are summed in stream order, so callers that emit triplets in
    (element, local row, local col) order get bitwise-reproducible results.
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    values = np.asarray(values, dtype=float).ravel()
    if not (len(rows) == len(cols) == len(values)):
        raise ValueError("triplet arrays differ in length")
    if len(rows) and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise IndexError("triplet index out of range")
    if len(rows) == 0:
        return SparseMatrix(np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64),
                            np.zeros(0), n)
    key = rows * n + cols
    order = np.argsort(key, kind="stable")
    key = key[order]
    vals = values[order]
    start = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    # sequential sum within each run keeps the stream order
    seg = np.repeat(np.arange(len(start)), np.diff(np.r_[start, len(key)]))
    data = np.zeros(len(start))
    np.add.at(data, seg, vals)
    ukey = key[start]
    urows, ucols = ukey // n, ukey % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(urows, minlength=n), out=indptr[1:])
    return SparseMatrix(indptr, ucols.astype(np.int64), data, n)


def assemble_triplets(n: int, triplets) -> SparseMatrix:
    """Convenience form of :func:`assemble` for an iterable of (row, col, value)."""
    trip = list(triplets)
    if not trip:
        return assemble(n, [], [], [])
    r, c, v = zip(*trip)
    return assemble(n, r, c, v)


def assemble_local(n: int, dof_map: np.ndarray, local: np.ndarray) -> SparseMatrix:
    """Assemble element matrices ``local`` (T, nl, nl) through ``dof_map`` (T, nl)."""
    rows = np.repeat(dof_map[:, :, None], dof_map.shape[1], axis=2)
    cols = np.repeat(dof_map[:, None, :], dof_map.shape[1], axis=1)
    return assemble(n, rows, cols, local)


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float


def pcg_solve(A: SparseMatrix, b, rel_tol: float = 1e-10, max_iter: int | None = None,
              x0=None) -> SolveResult:
    """Solve the SPD system ``A x = b`` with Jacobi-preconditioned CG.

    Stops when ``||b - A x||_2 <= rel_tol * ||b||_2``.  ``residual`` in the
    result is the true relative residual recomputed from ``x``.

    Raises
    ------
    ConvergenceError
        If the tolerance is not met within ``max_iter`` iterations.
    ValueError
        If ``A`` has a zero or negative diagonal entry.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    b = np.asarray(b, dtype=float)
    n = A.n
    if max_iter is None:
        max_iter = max(10 * n, 100)
    d = A.diagonal()
    if np.any(d <= 0):
        raise ValueError("matrix has a non-positive diagonal entry")
    inv_d = 1.0 / d
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return SolveResult(np.zeros(n), 0, 0.0)
    r = b - A.matvec(x)
    target = rel_tol * bnorm
    it = 0
    if np.linalg.norm(r) > target:
        z = inv_d * r
        p = z.copy()
        rz = r @ z
        while True:
            q = A.matvec(p)
            alpha = rz / (p @ q)
            x += alpha * p
            r -= alpha * q
            it += 1
            if np.linalg.norm(r) <= target:
                # guard against drift of the recursive residual
                r = b - A.matvec(x)
                if np.linalg.norm(r) <= target:
                    break
            if it >= max_iter:
                break
            z = inv_d * r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
    res = np.linalg.norm(b - A.matvec(x)) / bnorm
    if res > rel_tol:
        raise ConvergenceError(
            f"CG did not converge: relative residual {res:.3e} after {it} iterations")
    return SolveResult(x, it, float(res))
