"""Regularization of singular MNA models.

Nodes without any capacitance (the ``n2`` set) make ``E`` singular.  Their
voltages are eliminated through the conductance block ``G22``, giving a
regular model of order ``n1 + m`` whose system matrix

    A_reg = [[-G11, -W1], [W1^T, 0]] + [-G12; W2^T] G22^{-1} [-G12^T, -W2]

is dense.  It is never formed: solves go through the sparse augmented
matrix of the unpartitioned model and products through one sparse solve
with ``G22`` per block.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .circuit import detect_singularity
from .descriptor import LinearSystem, _FactorCache, block_diag_sparse
from .exceptions import (CapExceeded, DimensionMismatch, RegularizationError,
                         SingularG22, SingularMatrix)
from .sparse import as_block, as_sparse, factorize

DENSE_CAP = 2000


@dataclass
class PartitionedMNA:
    """MNA blocks with capacitive nodes (``n1``) first and the rest (``n2``) last."""

    G11: sp.csr_matrix
    G12: sp.csr_matrix
    G22: sp.csr_matrix
    W1: sp.csr_matrix
    W2: sp.csr_matrix
    C1: sp.csr_matrix
    M: sp.csr_matrix
    B1: np.ndarray
    B2: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    D: np.ndarray
    n1_index: np.ndarray
    n2_index: np.ndarray

    n1 = property(lambda self: self.G11.shape[0])
    n2 = property(lambda self: self.G22.shape[0])
    m = property(lambda self: self.M.shape[0])

    @cached_property
    def top_left(self):
        """``[[-G11, -W1], [W1^T, 0]]``, the sparse part of ``A_reg``."""
        m = self.m
        return as_sparse(sp.bmat([[-self.G11, -self.W1],
                                  [self.W1.T, sp.csr_matrix((m, m))]]))

    @cached_property
    def coupling_left(self):
        """``[-G12; W2^T]`` of shape ``(n1 + m, n2)``."""
        return as_sparse(sp.vstack([-self.G12, self.W2.T]))

    @cached_property
    def coupling_right(self):
        """``[-G12^T, -W2]`` of shape ``(n2, n1 + m)``."""
        return as_sparse(sp.hstack([-self.G12.T, -self.W2]))

    def augmented(self):
        """The sparse augmented matrix over ``(v1, i, v2)``."""
        return as_sparse(sp.bmat([
            [-self.G11, -self.W1, -self.G12],
            [self.W1.T, None, self.W2.T],
            [-self.G12.T, -self.W2, -self.G22],
        ], format="csr"))

    def augmented_E(self):
        return block_diag_sparse(self.C1, self.M, sp.csr_matrix((self.n2, self.n2)))


def partition_mna(sys, tol=1e-12):
    """Partition a sparse MNA ``DescriptorSystem`` by node capacitance."""
    if sys.n_nodes is None:
        raise RegularizationError(
            "model carries no node/branch split; regularization needs the MNA blocks")
    G, C, M, W = sys.mna_blocks()
    n = sys.n_nodes
    asym = abs(G - G.T).max() if G.nnz else 0.0
    if asym > tol * max(abs(G).max() if G.nnz else 1.0, 1.0):
        raise RegularizationError("conductance block is not symmetric")
    B, L = sys.B_dense, sys.L_dense
    if np.any(B[n:]) or np.any(L[:, n:]):
        raise RegularizationError("inputs/outputs on inductor branches are not supported")
    i1, i2 = detect_singularity(sys)
    G = G.tocsr()
    return PartitionedMNA(
        G11=as_sparse(G[i1][:, i1]), G12=as_sparse(G[i1][:, i2]), G22=as_sparse(G[i2][:, i2]),
        W1=as_sparse(W[i1]), W2=as_sparse(W[i2]),
        C1=as_sparse(C[i1][:, i1]), M=as_sparse(M),
        B1=B[i1], B2=B[i2], L1=L[:, i1], L2=L[:, i2], D=sys.D.copy(),
        n1_index=i1, n2_index=i2)


def factorize_g22(part):
    try:
        return factorize(part.G22)
    except SingularMatrix as exc:
        raise SingularG22(
            f"G22 ({part.n2} non-capacitive nodes) is singular: {exc}") from None


def build_connectivity(part, g22_factor=None):
    """Regularized input matrix and transposed output matrix.

    Uses exactly ``p`` solves for the inputs and ``q`` for the outputs.
    The branch block of the output map carries ``-W2^T G22^{-1} L2^T``
    (substituting ``v2`` into ``y = L1 v1 + L2 v2``).
    """
    F = g22_factor if g22_factor is not None else factorize_g22(part)
    XB = F.solve(part.B2)
    XL = F.solve(part.L2.T)
    B_reg = np.vstack([part.B1 - part.G12 @ XB, part.W2.T @ XB])
    Lt_reg = np.vstack([part.L1.T - part.G12 @ XL, -(part.W2.T @ XL)])
    return B_reg, Lt_reg


def solve_regularized_A(part, aug_factor, R):
    """``A_reg^{-1} R`` via the augmented sparse system with a zero ``v2`` right-hand side."""
    R = as_block(R)
    k = part.n1 + part.m
    if R.shape[0] != k:
        raise DimensionMismatch(f"expected {k} rows, got {R.shape[0]}")
    rhs = np.vstack([R, np.zeros((part.n2, R.shape[1]), dtype=R.dtype)])
    return aug_factor.solve(rhs)[:k]


def apply_regularized_A(part, g22_factor, K):
    """``A_reg K`` as a sparse product plus one ``G22`` solve per column."""
    K = as_block(K)
    out = part.top_left @ K
    if part.n2:
        V = g22_factor.solve(part.coupling_right @ K)
        out = out + part.coupling_left @ V
    return out


def dense_regularized_A(part, g22_factor=None, cap=DENSE_CAP, path="left"):
    """Explicit dense ``A_reg`` for desk-scale checks.

    ``path="left"`` forms ``G12 G22^{-1}`` and ``W2^T G22^{-1}`` first
    (solves whose solutions are the rows), ``path="right"`` forms
    ``G22^{-1} G12^T`` and ``G22^{-1} W2``.
    """
    k = part.n1 + part.m
    if k > cap:
        raise CapExceeded(f"dense regularized matrix of order {k} exceeds cap {cap}")
    A = part.top_left.toarray()
    if part.n2 == 0:
        return A
    F = g22_factor if g22_factor is not None else factorize_g22(part)
    G12, W2 = part.G12.toarray(), part.W2.toarray()
    if path == "left":
        P = F.solve(G12.T).T        # G12 G22^{-1}
        Q = F.solve(W2).T           # W2^T G22^{-1}
        corr = np.block([[P @ G12.T, P @ W2], [-(Q @ G12.T), -(Q @ W2)]])
    elif path == "right":
        Y1 = F.solve(G12.T)         # G22^{-1} G12^T
        Y2 = F.solve(W2)            # G22^{-1} W2
        corr = np.block([[G12 @ Y1, G12 @ Y2], [-(W2.T @ Y1), -(W2.T @ Y2)]])
    else:
        raise ValueError(f"unknown path {path!r}")
    return A + corr


class RegularizedSystem(LinearSystem):
    """Regular model of order ``n1 + m`` equivalent to a singular MNA model."""

    def __init__(self, part, g22_factor=None, B_reg=None, L_reg=None, D_reg=None,
                 _cache=None, input_names=None, output_names=None):
        self.part = part
        self.g22_factor = g22_factor if g22_factor is not None else factorize_g22(part)
        if B_reg is None:
            B_reg, Lt = build_connectivity(part, self.g22_factor)
            L_reg = Lt.T
            D_reg = part.L2 @ self.g22_factor.solve(part.B2) + part.D
        self.B_reg = B_reg
        self.L_reg = L_reg
        self.D = D_reg
        self.E = block_diag_sparse(part.C1, part.M)
        self.input_names = input_names or [f"in{i}" for i in range(B_reg.shape[1])]
        self.output_names = output_names or [f"out{i}" for i in range(L_reg.shape[0])]
        self._cache = _cache if _cache is not None else _FactorCache()

    order = property(lambda self: self.part.n1 + self.part.m)
    n_inputs = property(lambda self: self.B_reg.shape[1])
    n_outputs = property(lambda self: self.L_reg.shape[0])
    B_dense = property(lambda self: self.B_reg)
    L_dense = property(lambda self: self.L_reg)
    nnz_E = property(lambda self: self.E.nnz)

    @property
    def nnz_A(self):
        # solves with A_reg are solves with the sparse augmented matrix
        return self._augmented().nnz

    def _augmented(self):
        return self._cache.get("aug_matrix", self.part.augmented)

    @property
    def aug_factor(self):
        return self._cache.get("aug", lambda: factorize(self._augmented()))

    def _lu_E(self):
        return self._cache.get("E", lambda: factorize(self.E))

    def prepare(self, backward=False):
        self.aug_factor
        if backward:
            self._lu_E()

    def apply_A(self, X):
        return apply_regularized_A(self.part, self.g22_factor, X)

    def apply_E(self, X):
        return self.E @ as_block(X)

    def solve_A(self, X):
        return solve_regularized_A(self.part, self.aug_factor, X)

    def solve_E(self, X):
        return self._lu_E().solve(X)

    def resolvent_solve(self, s, R):
        R = as_block(R)
        K = (s * self.part.augmented_E() - self._augmented()).tocsc()
        rhs = np.vstack([R, np.zeros((self.part.n2, R.shape[1]))])
        return factorize(K).solve(rhs)[:self.order]

    def recover_v2(self, v1, i, u):
        """Node voltages of the eliminated nodes from ``(v1, i, u)``."""
        p = self.part
        rhs = p.B2 @ as_block(u) - p.G12.T @ as_block(v1) - p.W2 @ as_block(i)
        return self.g22_factor.solve(rhs)

    def input_subsystem(self, i):
        return RegularizedSystem(
            self.part, self.g22_factor, self.B_reg[:, [i]], self.L_reg,
            self.D[:, [i]], _cache=self._cache,
            input_names=[self.input_names[i]], output_names=self.output_names)

    def to_dense(self, cap=DENSE_CAP):
        A = dense_regularized_A(self.part, self.g22_factor, cap=cap)
        return self.E.toarray(), A, self.B_reg.copy(), self.L_reg.copy(), self.D.copy()

    def __repr__(self):
        return (f"RegularizedSystem(n1={self.part.n1}, n2={self.part.n2}, "
                f"m={self.part.m}, p={self.n_inputs}, q={self.n_outputs})")


def eliminate_v2(part, input_names=None, output_names=None):
    """Build the implicit regularized system for a partitioned model."""
    return RegularizedSystem(part, input_names=input_names, output_names=output_names)


def regularize(sys):
    """Partition and regularize a singular MNA model."""
    return eliminate_v2(partition_mna(sys), sys.input_names, sys.output_names)
