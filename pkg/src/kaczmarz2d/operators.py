"""Complex matrix storage with uniform row access for row-action solvers.

Three interchangeable representations sit behind one read-only interface:
dense row-major storage, compressed sparse rows, and an implicit Kronecker
product of two square factors that is never materialised.  Every operator
caches its per-row squared Euclidean norms at construction time (each
projection step divides by them), and all operations are reentrant, so one
operator may be shared between concurrently running solves.

Conventions: ``row_dot`` forms the plain, unconjugated product of a row with
a vector; ``row_pair_inner`` conjugates its *second* row.  Both match the
algebra of the two-row projection kernel in :mod:`kaczmarz2d.solvers`.
"""

from __future__ import annotations

import abc

import numpy as np
import scipy.sparse as sp

__all__ = [
    "RowOperator",
    "DenseMatrix",
    "SparseRowMatrix",
    "KroneckerOperator",
    "as_row_operator",
    "gram_eigenvalues",
    "gram_spectrum_small",
    "DiagnosticsCapError",
    "SPECTRUM_CAP",
    "KRON_DENSE_CAP",
]

SPECTRUM_CAP = 512
KRON_DENSE_CAP = 64


class DiagnosticsCapError(ValueError):
    """A dense diagnostic was requested above its size cap."""


def _check_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains NaN or Inf entries")


class RowOperator(abc.ABC):
    """Abstract read-only matrix exposing rows, inner products and matvecs."""

    def __init__(self, shape, row_norms_sq):
        self._shape = (int(shape[0]), int(shape[1]))
        rn2 = np.ascontiguousarray(row_norms_sq, dtype=np.float64)
        rn = np.sqrt(rn2)
        rn2.setflags(write=False)
        rn.setflags(write=False)
        self.row_norms_sq = rn2          # cached ||a_i||_2^2
        self.row_norms = rn
        self.frobenius_norm = float(np.sqrt(rn2.sum()))
        self.l21_norm = float(rn.sum())  # sum of row norms

    @property
    def shape(self) -> tuple[int, int]:
        return self._shape

    def _check_row(self, i) -> int:
        i = int(i)
        if not 0 <= i < self._shape[0]:
            raise IndexError(f"row index {i} out of range for {self._shape[0]} rows")
        return i

    def norms(self) -> tuple[float, float, np.ndarray]:
        """Return (Frobenius norm, sum of row norms, per-row norms)."""
        return self.frobenius_norm, self.l21_norm, self.row_norms

    @abc.abstractmethod
    def row_view(self, i) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero entries of row ``i`` as (column indices, values), columns increasing."""

    @abc.abstractmethod
    def row_dot(self, i, x) -> complex:
        """a_i x, no conjugation."""

    @abc.abstractmethod
    def rows_dot(self, idx, x) -> np.ndarray:
        """a_i x for every i in ``idx`` (one vector of products)."""

    @abc.abstractmethod
    def row_pair_inner(self, i, j) -> complex:
        """a_i a_j^* = sum_k A[i,k] conj(A[j,k])."""

    @abc.abstractmethod
    def add_scaled_row_conj(self, x, i, coeff) -> None:
        """In place: x += coeff * conj(a_i).  ``x`` must be complex and writable."""

    @abc.abstractmethod
    def apply(self, x) -> np.ndarray:
        """A x."""

    @abc.abstractmethod
    def apply_adjoint(self, y) -> np.ndarray:
        """A^* y (conjugate transpose)."""

    @abc.abstractmethod
    def apply_rows_conj(self, coeffs) -> np.ndarray:
        """sum over (i, c) in ``coeffs`` of c * (A conj(a_i)); used to downdate residuals."""

    @abc.abstractmethod
    def gram_submatrix(self, idx) -> np.ndarray:
        """Dense [a_i a_j^*] for i, j in ``idx``."""

    @abc.abstractmethod
    def gram_block(self, idx) -> np.ndarray:
        """Dense [a_i a_j^*] for i in ``idx`` and all j (len(idx) x m)."""

    @abc.abstractmethod
    def adjoint_gram(self) -> np.ndarray:
        """Dense A^* A (n x n); diagnostics only."""

    @abc.abstractmethod
    def to_dense(self) -> np.ndarray:
        """Materialise the full matrix; guarded for implicit representations."""


class DenseMatrix(RowOperator):
    """Row-major dense matrix with complex128 entries."""

    def __init__(self, values):
        a = np.array(values, dtype=np.complex128, order="C")
        if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
            raise ValueError(f"expected a nonempty 2-D array, got shape {a.shape}")
        _check_finite(a, "matrix")
        a.setflags(write=False)
        self.array = a
        super().__init__(a.shape, np.einsum("ij,ij->i", a, a.conj()).real)

    def row_view(self, i):
        i = self._check_row(i)
        row = self.array[i]
        cols = np.flatnonzero(row)
        return cols, row[cols]

    def row_dot(self, i, x):
        return complex(np.dot(self.array[self._check_row(i)], x))

    def rows_dot(self, idx, x):
        return self.array[idx] @ x

    def row_pair_inner(self, i, j):
        i, j = self._check_row(i), self._check_row(j)
        return complex(np.dot(self.array[i], np.conj(self.array[j])))

    def add_scaled_row_conj(self, x, i, coeff):
        x += coeff * np.conj(self.array[self._check_row(i)])

    def apply(self, x):
        return self.array @ x

    def apply_adjoint(self, y):
        # A^* y == conj(conj(y) @ A) without materialising conj(A)
        return np.conj(np.conj(y) @ self.array)

    def apply_rows_conj(self, coeffs):
        w = np.zeros(self._shape[1], dtype=np.complex128)
        for i, c in coeffs:
            w += c * np.conj(self.array[i])
        return self.array @ w

    def gram_submatrix(self, idx):
        rows = self.array[np.asarray(idx, dtype=np.intp)]
        return rows @ rows.conj().T

    def gram_block(self, idx):
        return self.array[np.asarray(idx, dtype=np.intp)] @ self.array.conj().T

    def adjoint_gram(self):
        return self.array.conj().T @ self.array

    def to_dense(self):
        return self.array.copy()


class SparseRowMatrix(RowOperator):
    """Compressed-sparse-row matrix with complex128 values.

    Stored zeros are tolerated (``row_view`` filters them); column indices
    must increase strictly within each row.
    """

    def __init__(self, shape, indptr, indices, data):
        m, n = int(shape[0]), int(shape[1])
        if m <= 0 or n <= 0:
            raise ValueError(f"invalid shape {(m, n)}")
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        data = np.ascontiguousarray(data, dtype=np.complex128)
        nnz = len(data)
        if indptr.shape != (m + 1,) or indptr[0] != 0 or indptr[-1] != nnz:
            raise ValueError("row offsets must run from 0 to nnz with m+1 entries")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("row offsets must be nondecreasing")
        if len(indices) != nnz:
            raise ValueError("column index and value arrays must have equal length")
        if nnz and (indices.min() < 0 or indices.max() >= n):
            raise ValueError("column index out of range")
        if nnz > 1:
            d = np.diff(indices)
            boundary = indptr[1:-1] - 1
            boundary = boundary[(boundary >= 0) & (boundary < nnz - 1)]
            mask = np.ones(nnz - 1, dtype=bool)
            mask[boundary] = False
            if np.any(d[mask] <= 0):
                raise ValueError("column indices must increase strictly within each row")
        _check_finite(data, "matrix")
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self._csr = sp.csr_matrix((data, indices, indptr), shape=(m, n))
        self._csc = self._csr.tocsc()
        self._adjoint = self._csr.conj().T.tocsr()
        rn2 = np.asarray(self._csr.multiply(self._csr.conj()).sum(axis=1)).ravel().real
        super().__init__((m, n), rn2)

    @classmethod
    def from_coo(cls, shape, rows, cols, values):
        """Build from triplets; duplicate positions are summed."""
        coo = sp.coo_matrix(
            (np.asarray(values, dtype=np.complex128), (rows, cols)), shape=shape
        )
        csr = coo.tocsr()
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(shape, csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_scipy(cls, matrix):
        csr = matrix.tocsr(copy=True)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(csr.shape, csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_dense(cls, values):
        return cls.from_scipy(sp.csr_matrix(np.asarray(values, dtype=np.complex128)))

    def _row_slice(self, i):
        return slice(self.indptr[i], self.indptr[i + 1])

    def row_view(self, i):
        sl = self._row_slice(self._check_row(i))
        cols, vals = self.indices[sl], self.data[sl]
        keep = vals != 0
        return cols[keep], vals[keep]

    def row_dot(self, i, x):
        sl = self._row_slice(self._check_row(i))
        return complex(np.dot(self.data[sl], x[self.indices[sl]]))

    def rows_dot(self, idx, x):
        return self._csr[np.asarray(idx, dtype=np.intp)] @ x

    def row_pair_inner(self, i, j):
        si = self._row_slice(self._check_row(i))
        sj = self._row_slice(self._check_row(j))
        common, ii, jj = np.intersect1d(
            self.indices[si], self.indices[sj], assume_unique=True, return_indices=True
        )
        if common.size == 0:
            return 0j
        return complex(np.dot(self.data[si][ii], np.conj(self.data[sj][jj])))

    def add_scaled_row_conj(self, x, i, coeff):
        sl = self._row_slice(self._check_row(i))
        x[self.indices[sl]] += coeff * np.conj(self.data[sl])

    def apply(self, x):
        return self._csr @ np.asarray(x, dtype=np.complex128)

    def apply_adjoint(self, y):
        return self._adjoint @ np.asarray(y, dtype=np.complex128)

    def apply_rows_conj(self, coeffs):
        out = np.zeros(self._shape[0], dtype=np.complex128)
        for i, c in coeffs:
            sl = self._row_slice(i)
            cols = self.indices[sl]
            out += self._csc[:, cols] @ (c * np.conj(self.data[sl]))
        return out

    def gram_submatrix(self, idx):
        sub = self._csr[np.asarray(idx, dtype=np.intp)]
        return (sub @ sub.conj().T).toarray()

    def gram_block(self, idx):
        sub = self._csr[np.asarray(idx, dtype=np.intp)]
        return (sub @ self._csr.conj().T).toarray()

    def adjoint_gram(self):
        return (self._adjoint @ self._csr).toarray()

    def to_dense(self):
        return self._csr.toarray()


class KroneckerOperator(RowOperator):
    """Implicit Kronecker product ``left (x) right`` of two square factors.

    With i = p*n2 + q and j = u*n2 + v, entry (i, j) is left[p, u] * right[q, v].
    Rows, matvecs and adjoint matvecs are generated on the fly; the product is
    only materialised by :meth:`to_dense`, and only for factors of order at
    most ``KRON_DENSE_CAP``.
    """

    def __init__(self, left, right):
        left = np.array(getattr(left, "array", left), dtype=np.complex128, order="C")
        right = np.array(getattr(right, "array", right), dtype=np.complex128, order="C")
        for name, f in (("left", left), ("right", right)):
            if f.ndim != 2 or f.shape[0] != f.shape[1] or f.shape[0] == 0:
                raise ValueError(f"{name} factor must be square and nonempty, got {f.shape}")
            _check_finite(f, f"{name} factor")
            f.setflags(write=False)
        self.left = left
        self.right = right
        self.n1 = left.shape[0]
        self.n2 = right.shape[0]
        self._llo, self._lhi = _support_bounds(left)
        self._rlo, self._rhi = _support_bounds(right)
        rn2_left = np.einsum("ij,ij->i", left, left.conj()).real
        rn2_right = np.einsum("ij,ij->i", right, right.conj()).real
        m = self.n1 * self.n2
        super().__init__((m, m), np.outer(rn2_left, rn2_right).ravel())

    def _split(self, i):
        return divmod(self._check_row(i), self.n2)

    def row_view(self, i):
        p, q = self._split(i)
        us = np.arange(self._llo[p], self._lhi[p])
        vs = np.arange(self._rlo[q], self._rhi[q])
        vals = np.multiply.outer(self.left[p, self._llo[p]:self._lhi[p]],
                                 self.right[q, self._rlo[q]:self._rhi[q]]).ravel()
        cols = (us[:, None] * self.n2 + vs[None, :]).ravel()
        keep = vals != 0
        return cols[keep], vals[keep]

    def row_dot(self, i, x):
        p, q = self._split(i)
        x2 = np.reshape(x, (self.n1, self.n2))
        block = x2[self._llo[p]:self._lhi[p], self._rlo[q]:self._rhi[q]]
        lrow = self.left[p, self._llo[p]:self._lhi[p]]
        rrow = self.right[q, self._rlo[q]:self._rhi[q]]
        return complex(lrow @ block @ rrow)

    def rows_dot(self, idx, x):
        idx = np.asarray(idx, dtype=np.intp)
        ps, qs = np.divmod(idx, self.n2)
        x2 = np.reshape(x, (self.n1, self.n2))
        w = self.left[ps] @ x2                       # (k, n2)
        return np.einsum("kj,kj->k", w, self.right[qs])

    def row_pair_inner(self, i, j):
        p, q = self._split(i)
        pp, qq = self._split(j)
        li = complex(np.dot(self.left[p], np.conj(self.left[pp])))
        ri = complex(np.dot(self.right[q], np.conj(self.right[qq])))
        return li * ri

    def add_scaled_row_conj(self, x, i, coeff):
        p, q = self._split(i)
        x2 = x.reshape(self.n1, self.n2)
        lrow = np.conj(self.left[p, self._llo[p]:self._lhi[p]])
        rrow = np.conj(self.right[q, self._rlo[q]:self._rhi[q]])
        x2[self._llo[p]:self._lhi[p], self._rlo[q]:self._rhi[q]] += coeff * np.multiply.outer(lrow, rrow)

    def apply(self, x):
        x2 = np.reshape(np.asarray(x, dtype=np.complex128), (self.n1, self.n2))
        return ((self.left @ x2) @ self.right.T).ravel()

    def apply_adjoint(self, y):
        y2 = np.reshape(np.asarray(y, dtype=np.complex128), (self.n1, self.n2))
        return ((self.left.conj().T @ y2) @ np.conj(self.right)).ravel()

    def apply_rows_conj(self, coeffs):
        idx = np.array([i for i, _ in coeffs], dtype=np.intp)
        cs = np.array([c for _, c in coeffs], dtype=np.complex128)
        ps, qs = np.divmod(idx, self.n2)
        u = self.left @ np.conj(self.left[ps].T)    # (n1, k)
        v = self.right @ np.conj(self.right[qs].T)  # (n2, k)
        return ((u * cs) @ v.T).ravel()

    def gram_submatrix(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        ps, qs = np.divmod(idx, self.n2)
        gl = self.left[ps] @ self.left[ps].conj().T
        gr = self.right[qs] @ self.right[qs].conj().T
        return gl * gr

    def gram_block(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        ps, qs = np.divmod(idx, self.n2)
        gl = self.left[ps] @ self.left.conj().T      # (k, n1)
        gr = self.right[qs] @ self.right.conj().T    # (k, n2)
        return np.einsum("kp,kq->kpq", gl, gr).reshape(len(idx), self._shape[1])

    def adjoint_gram(self):
        return np.kron(self.left.conj().T @ self.left, self.right.conj().T @ self.right)

    def to_dense(self):
        if self.n1 > KRON_DENSE_CAP or self.n2 > KRON_DENSE_CAP:
            raise DiagnosticsCapError(
                f"dense materialisation is forbidden for factors larger than "
                f"{KRON_DENSE_CAP}x{KRON_DENSE_CAP} (got {self.n1} and {self.n2})"
            )
        return np.kron(self.left, self.right)


def _support_bounds(factor):
    """First and one-past-last nonzero column per row (0, 0 for empty rows)."""
    nz = factor != 0
    any_nz = nz.any(axis=1)
    lo = np.where(any_nz, nz.argmax(axis=1), 0)
    hi = np.where(any_nz, factor.shape[1] - nz[:, ::-1].argmax(axis=1), 0)
    return lo.astype(np.intp), hi.astype(np.intp)


def as_row_operator(matrix) -> RowOperator:
    """Coerce an ndarray, scipy sparse matrix or RowOperator to a RowOperator."""
    if isinstance(matrix, RowOperator):
        return matrix
    if sp.issparse(matrix):
        return SparseRowMatrix.from_scipy(matrix)
    return DenseMatrix(np.asarray(matrix))


def gram_eigenvalues(op: RowOperator, cap: int = SPECTRUM_CAP) -> np.ndarray:
    """Ascending eigenvalues of the smaller-side Gram matrix (A A^* or A^* A).

    Both sides share the nonzero spectrum {sigma_i^2}.  Dense and O(min(m,n)^3),
    hence the cap; this is diagnostics machinery, never on the solve path.
    """
    m, n = op.shape
    if min(m, n) > cap:
        raise DiagnosticsCapError(
            f"diagnostics cap: min(m, n) = {min(m, n)} exceeds {cap}"
        )
    if m <= n:
        g = op.gram_submatrix(np.arange(m))
    else:
        g = op.adjoint_gram()
    g = 0.5 * (g + g.conj().T)  # suppress roundoff asymmetry
    return np.maximum(np.linalg.eigvalsh(g), 0.0)


def gram_spectrum_small(
    op: RowOperator, cap: int = SPECTRUM_CAP, rank_rtol: float = 1e-10
) -> tuple[float, float]:
    """(smallest nonzero eigenvalue of A^* A, largest singular value).

    Eigenvalues below ``rank_rtol`` times the largest are treated as zero, so
    the first component is the smallest *nonzero* Gram eigenvalue even for
    rank-deficient input.
    """
    eigs = gram_eigenvalues(op, cap=cap)
    lam_max = float(eigs[-1])
    if lam_max == 0.0:
        raise ValueError("zero operator has no nonzero Gram eigenvalue")
    nonzero = eigs[eigs > rank_rtol * lam_max]
    return float(nonzero[0]), float(np.sqrt(lam_max))
