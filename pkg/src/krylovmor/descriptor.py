"""Descriptor-form linear systems ``E x' = A x + B u, y = L x + D u``.

Every model the reduction code touches (sparse MNA models, regularized
singular models, dense reduced models) implements the small interface of
:class:`LinearSystem`: products and solves with ``A`` and ``E``, dense
input/output maps, and solves with ``sE - A``.
"""

import threading
import warnings

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .exceptions import DimensionMismatch, SingularMatrix
from .sparse import as_block, as_sparse, factorize


class LinearSystem:
    """Common interface of all descriptor models.

    Subclasses provide ``order``, ``n_inputs``, ``n_outputs``, ``B_dense``,
    ``L_dense``, ``D``, ``nnz_A``, ``nnz_E`` and the methods below.
    """

    def apply_A(self, X):
        raise NotImplementedError

    def apply_E(self, X):
        raise NotImplementedError

    def solve_A(self, X):
        raise NotImplementedError

    def solve_E(self, X):
        raise NotImplementedError

    def resolvent_solve(self, s, R):
        """Solve ``(sE - A) X = R``; raises ``SingularMatrix`` at a pole."""
        raise NotImplementedError

    def input_subsystem(self, i):
        """The single-input subsystem driven by input ``i`` alone."""
        raise NotImplementedError

    def prepare(self, backward=False):
        """Build cached factorizations up front (before sharing across threads)."""

    def frequency_response(self, s):
        """``H(s) = L (sE - A)^{-1} B + D`` as a dense ``q x p`` array."""
        X = self.resolvent_solve(s, self.B_dense)
        return self.L_dense @ X + self.D


class _FactorCache:
    """Lazily built, lock-protected factorizations shared by subsystems."""

    def __init__(self):
        self._lock = threading.RLock()
        self._store = {}

    def get(self, key, build):
        with self._lock:
            if key not in self._store:
                self._store[key] = build()
            return self._store[key]


class DescriptorSystem(LinearSystem):
    """Sparse descriptor model, typically the MNA model of an RLC circuit.

    Parameters
    ----------
    E, A : sparse (N, N)
    B : sparse or dense (N, p)
    L : sparse or dense (q, N)
    D : dense (q, p), optional (zero by default)
    n_nodes : int, optional
        Number of leading node-voltage states (the rest are inductor
        currents).  Needed to recover the MNA blocks for regularization.
    input_names, output_names : list of str, optional
    """

    def __init__(self, E, A, B, L, D=None, n_nodes=None, input_names=None,
                 output_names=None, _cache=None):
        self.E = as_sparse(E)
        self.A = as_sparse(A)
        self.B = as_sparse(B)
        self.L = as_sparse(L)
        N = self.A.shape[0]
        if self.A.shape != (N, N) or self.E.shape != (N, N):
            raise DimensionMismatch(
                f"E {self.E.shape} and A {self.A.shape} must be square and equal")
        if self.B.shape[0] != N or self.L.shape[1] != N:
            raise DimensionMismatch(
                f"B {self.B.shape} / L {self.L.shape} incompatible with order {N}")
        p, q = self.B.shape[1], self.L.shape[0]
        self.D = np.zeros((q, p)) if D is None else np.array(as_block(D), dtype=float)
        if self.D.shape != (q, p):
            raise DimensionMismatch(f"D has shape {self.D.shape}, expected {(q, p)}")
        if n_nodes is not None and not 0 <= n_nodes <= N:
            raise DimensionMismatch(f"n_nodes={n_nodes} outside [0, {N}]")
        self.n_nodes = n_nodes
        self.input_names = list(input_names) if input_names else [f"in{i}" for i in range(p)]
        self.output_names = list(output_names) if output_names else [f"out{i}" for i in range(q)]
        self._cache = _cache if _cache is not None else _FactorCache()

    order = property(lambda self: self.A.shape[0])
    n_inputs = property(lambda self: self.B.shape[1])
    n_outputs = property(lambda self: self.L.shape[0])
    nnz_A = property(lambda self: self.A.nnz)
    nnz_E = property(lambda self: self.E.nnz)

    @property
    def B_dense(self):
        return self.B.toarray()

    @property
    def L_dense(self):
        return self.L.toarray()

    @property
    def n_node_states(self):
        return self.order if self.n_nodes is None else self.n_nodes

    @property
    def singular_E(self):
        """True iff some node state has an all-zero row and column in ``E``."""
        n = self.n_node_states
        C = self.E[:n, :n]
        rows = np.diff(C.indptr) > 0
        cols = np.diff(C.tocsc().indptr) > 0
        return bool(np.any(~(rows | cols)))

    def mna_blocks(self):
        """Recover ``(G, C, M, W)`` from ``A = -[[G, W], [-W^T, 0]]``, ``E = diag(C, M)``."""
        n = self.n_node_states
        G = as_sparse(-self.A[:n, :n])
        W = as_sparse(-self.A[:n, n:])
        C = as_sparse(self.E[:n, :n])
        M = as_sparse(self.E[n:, n:])
        return G, C, M, W

    def _lu_A(self):
        return self._cache.get("A", lambda: factorize(self.A))

    def _lu_E(self):
        return self._cache.get("E", lambda: factorize(self.E))

    def prepare(self, backward=False):
        self._lu_A()
        if backward:
            self._lu_E()

    def apply_A(self, X):
        return self.A @ as_block(X)

    def apply_E(self, X):
        return self.E @ as_block(X)

    def solve_A(self, X):
        return self._lu_A().solve(X)

    def solve_E(self, X):
        return self._lu_E().solve(X)

    def resolvent_solve(self, s, R):
        K = (s * self.E - self.A).tocsc()
        return factorize(K).solve(R)

    def input_subsystem(self, i):
        return DescriptorSystem(
            self.E, self.A, self.B[:, [i]], self.L, self.D[:, [i]],
            n_nodes=self.n_nodes, input_names=[self.input_names[i]],
            output_names=self.output_names, _cache=self._cache)

    def to_dense(self):
        return (self.E.toarray(), self.A.toarray(), self.B_dense,
                self.L_dense, self.D.copy())

    def __repr__(self):
        return (f"DescriptorSystem(N={self.order}, p={self.n_inputs}, "
                f"q={self.n_outputs}, nnz_A={self.nnz_A}, nnz_E={self.nnz_E})")


class DenseSystem(LinearSystem):
    """Small dense descriptor model (reduced models, test oracles)."""

    def __init__(self, E, A, B, L, D=None):
        self.E = np.array(as_block(E), dtype=float)
        self.A = np.array(as_block(A), dtype=float)
        self.B = np.array(as_block(B), dtype=float)
        self.L = np.array(np.atleast_2d(L), dtype=float)
        r = self.A.shape[0]
        if self.A.shape != (r, r) or self.E.shape != (r, r):
            raise DimensionMismatch(f"E {self.E.shape}, A {self.A.shape}")
        if self.B.shape[0] != r or self.L.shape[1] != r:
            raise DimensionMismatch(f"B {self.B.shape}, L {self.L.shape}")
        p, q = self.B.shape[1], self.L.shape[0]
        self.D = np.zeros((q, p)) if D is None else np.array(np.atleast_2d(D), dtype=float)
        if self.D.shape != (q, p):
            raise DimensionMismatch(f"D has shape {self.D.shape}, expected {(q, p)}")
        self._lu = {}

    order = property(lambda self: self.A.shape[0])
    n_inputs = property(lambda self: self.B.shape[1])
    n_outputs = property(lambda self: self.L.shape[0])
    nnz_A = property(lambda self: int(np.count_nonzero(self.A)))
    nnz_E = property(lambda self: int(np.count_nonzero(self.E)))
    B_dense = property(lambda self: self.B)
    L_dense = property(lambda self: self.L)

    @staticmethod
    def _dense_lu(M):
        if M.shape[0] == 0:
            return None
        scale = np.abs(M).max()
        with warnings.catch_warnings():
            # singularity is reported through the pivot check below
            warnings.simplefilter("ignore", la.LinAlgWarning)
            lu, piv = la.lu_factor(M, check_finite=False)
        if scale == 0.0 or np.abs(np.diag(lu)).min() <= 1e-14 * scale:
            raise SingularMatrix("dense factorization hit a zero pivot")
        return lu, piv

    def _solve(self, key, M, X):
        X = as_block(X)
        if key not in self._lu:
            self._lu[key] = self._dense_lu(M)
        if self._lu[key] is None:
            return X.copy()
        return la.lu_solve(self._lu[key], X, check_finite=False)

    def apply_A(self, X):
        return self.A @ as_block(X)

    def apply_E(self, X):
        return self.E @ as_block(X)

    def solve_A(self, X):
        return self._solve("A", self.A, X)

    def solve_E(self, X):
        return self._solve("E", self.E, X)

    def prepare(self, backward=False):
        self.solve_A(np.zeros((self.order, 0)))
        if backward:
            self.solve_E(np.zeros((self.order, 0)))

    def resolvent_solve(self, s, R):
        K = s * self.E - self.A
        lu = self._dense_lu(K)
        R = as_block(R)
        if lu is None:
            return R.astype(complex)
        return la.lu_solve(lu, R, check_finite=False)

    def input_subsystem(self, i):
        return DenseSystem(self.E, self.A, self.B[:, [i]], self.L, self.D[:, [i]])

    def to_dense(self):
        return self.E.copy(), self.A.copy(), self.B.copy(), self.L.copy(), self.D.copy()


def dense_system(sys):
    """Densify any system exposing ``to_dense`` (desk-scale oracles)."""
    return DenseSystem(*sys.to_dense())


def block_diag_sparse(*blocks):
    return as_sparse(sp.block_diag(blocks, format="csr"))
