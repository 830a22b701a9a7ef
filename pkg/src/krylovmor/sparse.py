"""Sparse storage, factor-once/solve-many direct solves and the dense
block orthogonalization kernels used by the Krylov engines.

Sparse matrices are plain ``scipy.sparse.csr_matrix`` objects kept in
canonical form (sorted indices, no duplicates, no stored zeros).  Dense
blocks are 2-D ``numpy`` arrays.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import DimensionMismatch, SingularMatrix

#: relative pivot threshold below which a factorization is declared singular
PIVOT_TOL = 1e-14

#: a column keeping less than this fraction of its norm is reorthogonalized
REORTH_ETA = 1.0 / np.sqrt(2.0)


def as_sparse(X, dtype=float):
    """Return ``X`` as a canonical CSR matrix."""
    M = sp.csr_matrix(X, dtype=dtype, copy=True)
    M.sum_duplicates()
    M.eliminate_zeros()
    M.sort_indices()
    return M


def as_block(X):
    """Return ``X`` as a 2-D float (or complex) array; 1-D input becomes a column."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D block, got shape {X.shape}")
    if not np.iscomplexobj(X):
        X = X.astype(float, copy=False)
    return X


class Factorization:
    """LU factorization (partial pivoting) of a square sparse matrix.

    Immutable after construction; :meth:`solve` may be called concurrently.
    """

    def __init__(self, A):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"cannot factorize non-square {A.shape}")
        self.shape = A.shape
        self.n = A.shape[0]
        self.dtype = np.result_type(A.dtype, float)
        self.nnz = A.nnz
        if self.n == 0:
            self._lu = None
            return
        scale = abs(A).max() if A.nnz else 0.0
        if scale == 0.0:
            raise SingularMatrix("matrix is identically zero")
        try:
            # diag_pivot_thresh=1 -> classical partial pivoting
            self._lu = spla.splu(A.astype(self.dtype), diag_pivot_thresh=1.0,
                                 options={"SymmetricMode": False})
        except RuntimeError as exc:
            raise SingularMatrix(str(exc)) from None
        pivots = np.abs(self._lu.U.diagonal())
        if pivots.min() <= PIVOT_TOL * scale:
            raise SingularMatrix(
                f"pivot {pivots.min():.3e} below tolerance "
                f"{PIVOT_TOL:.0e} * {scale:.3e}")

    def solve(self, R):
        """Solve ``A Y = R`` for a vector or a block of right-hand sides."""
        R = np.asarray(R)
        vector = R.ndim == 1
        R = as_block(R)
        if R.shape[0] != self.n:
            raise DimensionMismatch(
                f"right-hand side has {R.shape[0]} rows, matrix order is {self.n}")
        if self.n == 0 or R.shape[1] == 0:
            Y = np.zeros(R.shape, dtype=np.result_type(R.dtype, self.dtype))
        elif np.iscomplexobj(R) and not np.iscomplexobj(np.empty(0, self.dtype)):
            Y = (self._lu.solve(np.ascontiguousarray(R.real))
                 + 1j * self._lu.solve(np.ascontiguousarray(R.imag)))
        else:
            Y = self._lu.solve(np.ascontiguousarray(R, dtype=np.result_type(R.dtype, self.dtype)))
        return Y[:, 0] if vector else Y


def factorize(A):
    """Factorize a square sparse matrix, raising ``SingularMatrix`` if needed."""
    return Factorization(A)


def solve(F, R):
    return F.solve(R)


def _mgs(X, rank_tol, ref_norms):
    n, k = X.shape
    if ref_norms is None:
        ref_norms = np.linalg.norm(X, axis=0)
    Q = np.empty((n, k), dtype=X.dtype)
    kept = np.zeros(k, dtype=bool)
    rank = 0
    for j in range(k):
        ref = ref_norms[j]
        if ref == 0.0:
            continue
        w = X[:, j].copy()
        before = np.linalg.norm(w)
        for i in range(rank):
            w -= np.vdot(Q[:, i], w) * Q[:, i]
        after = np.linalg.norm(w)
        if after < REORTH_ETA * before:
            for i in range(rank):
                w -= np.vdot(Q[:, i], w) * Q[:, i]
            after = np.linalg.norm(w)
        if after <= rank_tol * ref:
            continue
        Q[:, rank] = w / after
        kept[j] = True
        rank += 1
    return Q[:, :rank], kept


def qr_mgs(X, rank_tol=1e-10, ref_norms=None):
    """Orthonormalize the columns of ``X`` by modified Gram-Schmidt.

    A column is reorthogonalized once if the first sweep removes more than
    ``1 - 1/sqrt(2)`` of its norm, and dropped when what is left is below
    ``rank_tol`` times its reference norm (the norm of the column as passed
    in, unless ``ref_norms`` is given).

    Returns
    -------
    Q : ndarray of shape (n, rank)
    rank : int
    """
    Q, kept = _mgs(as_block(X), rank_tol, ref_norms)
    return Q, int(kept.sum())


def _chunks(ncols, p, widths):
    if widths is None:
        if p < 1:
            raise DimensionMismatch("block size p must be positive")
        step = 2 * p
        widths = [min(step, ncols - s) for s in range(0, ncols, step)]
    elif sum(widths) != ncols:
        raise DimensionMismatch(
            f"block widths sum to {sum(widths)}, basis has {ncols} columns")
    start = 0
    for w in widths:
        yield slice(start, start + w)
        start += w


def orth_against(V1, Vj, p, widths=None):
    """Orthogonalize the block ``V1`` against the orthonormal columns of ``Vj``.

    ``Vj`` is swept block by block (blocks of ``2p`` columns, or the given
    ``widths``), each block projected out of the running result.  A second
    sweep is made when any column lost more than ``1 - 1/sqrt(2)`` of its
    norm in the first one.
    """
    V1 = as_block(V1)
    Vj = as_block(Vj)
    if V1.shape[0] != Vj.shape[0]:
        raise DimensionMismatch(
            f"block has {V1.shape[0]} rows, basis has {Vj.shape[0]}")
    blocks = list(_chunks(Vj.shape[1], p, widths))
    V2 = V1.copy()
    before = np.linalg.norm(V2, axis=0)
    for sl in blocks:
        Q = Vj[:, sl]
        V2 -= Q @ (Q.conj().T @ V2)
    after = np.linalg.norm(V2, axis=0)
    if np.any(after < REORTH_ETA * before):
        for sl in blocks:
            Q = Vj[:, sl]
            V2 -= Q @ (Q.conj().T @ V2)
    return V2
