"""Block Arnoldi construction of projection bases.

Three subspaces are supported, all built from ``A_E = A^{-1} E`` and
``B_E = A^{-1} B``:

* the standard Krylov subspace ``span{B_E, A_E B_E, A_E^2 B_E, ...}``,
* the extended Krylov subspace (EKS), which adds the backward sequence
  ``A_E^{-1} B_E, A_E^{-2} B_E, ...`` one block per forward block,
* the asymmetric EKS (AEKS), which advances mostly in the direction whose
  solves are cheaper and adds one block of the other direction every
  ``m`` iterations.

Forward steps cost one solve with ``A`` per column, backward steps one
solve with ``E``.  Blocks may lose columns to deflation; the engines track
the actual widths and always continue from the most recent block of each
direction.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import Deflated
from .sparse import _mgs, as_block, orth_against

FORWARD = "forward"
BACKWARD = "backward"
RANK_TOL = 1e-10


class OperatorPair:
    """``A_E`` and ``A_E^{-1}`` applied through a system's solves.

    Counts the columns solved against ``A`` and ``E``; create one per
    engine run.
    """

    def __init__(self, sys, B=None):
        self.sys = sys
        self.B = as_block(sys.B_dense if B is None else B)
        self.nnz_A = sys.nnz_A
        self.nnz_E = sys.nnz_E
        self.solves_A = 0
        self.solves_E = 0

    def B_E(self):
        self.solves_A += self.B.shape[1]
        return self.sys.solve_A(self.B)

    def apply_AE(self, X):
        X = as_block(X)
        self.solves_A += X.shape[1]
        if X.shape[1] == 0:
            return X.copy()
        return self.sys.solve_A(self.sys.apply_E(X))

    def apply_AE_inv(self, X):
        X = as_block(X)
        self.solves_E += X.shape[1]
        if X.shape[1] == 0:
            return X.copy()
        return self.sys.solve_E(self.sys.apply_A(X))

    def apply(self, direction, X):
        return self.apply_AE(X) if direction == FORWARD else self.apply_AE_inv(X)

    @property
    def solve_counts(self):
        return {"A": self.solves_A, "E": self.solves_E}


@dataclass(frozen=True)
class Block:
    """One block of basis columns.

    ``solves`` columns were solved (against ``A`` for forward blocks and
    against ``E`` for backward ones) to produce the ``width`` columns kept
    after orthogonalization.
    """

    direction: str
    start: int
    width: int
    solves: int
    iteration: int


@dataclass
class ProjectionBasis:
    V: np.ndarray
    schedule: list
    solve_counts: dict
    method: str
    requested: int
    n_inputs: int
    chunk_widths: list = field(default_factory=list)

    @property
    def rank(self):
        return self.V.shape[1]

    @property
    def n_columns_built(self):
        """Columns generated before truncation to the requested order."""
        return sum(b.width for b in self.schedule)

    def predicted_solves(self):
        """Solve counts implied by the schedule (``B_E`` costs ``p`` solves with ``A``)."""
        counts = {"A": self.n_inputs, "E": 0}
        for b in self.schedule:
            counts["A" if b.direction == FORWARD else "E"] += b.solves
        return counts

    def blocks(self, direction):
        return [b for b in self.schedule if b.direction == direction]


class _Builder:
    def __init__(self, ops, p):
        self.ops = ops
        self.p = p
        self.cols = []
        self.ncols = 0
        self.schedule = []
        self.chunks = []
        self.latest = {}

    def basis(self):
        if not self.cols:
            return np.zeros((self.ops.B.shape[0], 0))
        return np.hstack(self.cols)

    def source(self, direction):
        block = self.latest.get(direction)
        if block is None:
            return np.zeros((self.ops.B.shape[0], 0))
        return self.cols_of(block)

    def cols_of(self, block):
        return self.basis()[:, block.start:block.start + block.width]

    def alive(self, direction):
        block = self.latest.get(direction)
        return block is not None and block.width > 0

    def append(self, parts, iteration):
        """Orthonormalize ``[part for (direction, solves, part) in parts]`` and append."""
        V1 = np.hstack([part for _, _, part in parts])
        ref = np.linalg.norm(V1, axis=0)
        if self.ncols:
            V2 = orth_against(V1, self.basis(), self.p, widths=self.chunks)
        else:
            V2 = V1
        Q, kept = _mgs(V2, RANK_TOL, ref)
        offset = 0
        start = self.ncols
        for direction, solves, part in parts:
            width = int(kept[offset:offset + part.shape[1]].sum())
            offset += part.shape[1]
            block = Block(direction, start, width, solves, iteration)
            self.schedule.append(block)
            self.latest[direction] = block
            start += width
        if Q.shape[1]:
            self.cols.append(Q)
            self.chunks.append(Q.shape[1])
            self.ncols += Q.shape[1]
        return Q.shape[1]

    def step(self, directions, iteration):
        parts = []
        for d in directions:
            src = self.source(d)
            parts.append((d, src.shape[1], self.ops.apply(d, src)))
        return self.append(parts, iteration)

    def finish(self, method, r):
        V = self.basis()[:, :r]
        basis = ProjectionBasis(V, self.schedule, self.ops.solve_counts, method, r,
                                self.ops.B.shape[1], list(self.chunks))
        if basis.rank < r:
            raise Deflated(basis, r)
        return basis


def _check_order(r, p, minimum):
    if p < 1:
        raise ValueError("at least one input is required")
    if r < minimum * p:
        raise ValueError(f"order r={r} must be at least {minimum}*p={minimum * p}")


def standard_krylov(ops, r, p=None):
    """Orthonormal basis of ``span{B_E, A_E B_E, A_E^2 B_E, ...}`` truncated to ``r`` columns."""
    p = ops.B.shape[1] if p is None else p
    _check_order(r, p, 1)
    b = _Builder(ops, p)
    b.append([(FORWARD, 0, ops.B_E())], 0)
    j = 1
    while b.ncols < r and b.alive(FORWARD):
        b.step([FORWARD], j)
        j += 1
    return b.finish("MM", r)


def compute_eks(ops, r, p=None):
    """Orthonormal basis of the extended Krylov subspace.

    Starts from ``qr([B_E, A_E^{-1} B_E])`` and at each iteration applies
    ``A_E`` to the newest forward block and ``A_E^{-1}`` to the newest
    backward block, then orthogonalizes the pair against the basis.  Stops
    once ``r`` columns exist (the last pair may overshoot; the basis is
    truncated).
    """
    p = ops.B.shape[1] if p is None else p
    _check_order(r, p, 2)
    b = _Builder(ops, p)
    BE = ops.B_E()
    b.append([(FORWARD, 0, BE), (BACKWARD, BE.shape[1], ops.apply_AE_inv(BE))], 0)
    j = 1
    while b.ncols < r and (b.alive(FORWARD) or b.alive(BACKWARD)):
        b.step([FORWARD, BACKWARD], j)
        j += 1
    return b.finish("EKS", r)


def sparser_direction(ops):
    """``BACKWARD`` when solves with ``E`` are at most as dense as with ``A`` (ties included)."""
    return BACKWARD if ops.nnz_E <= ops.nnz_A else FORWARD


def compute_aeks(ops, r, p=None, m=3):
    """Orthonormal basis of the asymmetric extended Krylov subspace.

    The direction with the sparser solves (``E`` when ``nnz(E) <= nnz(A)``)
    is extended on every iteration; on iterations ``j`` with ``j % m == 0``
    the other direction receives one block as well.  With ``m = 1`` this is
    the EKS.  If the scheduled direction has deflated away, the other one
    is extended instead.
    """
    p = ops.B.shape[1] if p is None else p
    _check_order(r, p, 2)
    if m < 1:
        raise ValueError("modulo m must be >= 1")
    sparse = sparser_direction(ops)
    dense = FORWARD if sparse == BACKWARD else BACKWARD
    b = _Builder(ops, p)
    BE = ops.B_E()
    back = (BACKWARD, BE.shape[1], ops.apply_AE_inv(BE))
    seeds = [(FORWARD, 0, BE), back] if sparse == BACKWARD else [back, (FORWARD, 0, BE)]
    b.append(seeds, 0)
    j = 1
    while b.ncols < r and (b.alive(FORWARD) or b.alive(BACKWARD)):
        directions = [sparse] if j % m else [dense, sparse]
        if not any(b.alive(d) for d in directions):
            directions = [dense, sparse]
        b.step(directions, j)
        j += 1
    basis = b.finish("AEKS", r)
    return basis


def build_basis(sys, method, r, m=3, B=None):
    """Run the engine named by ``method`` (``mm``, ``eks`` or ``aeks``) on a system."""
    ops = OperatorPair(sys, B)
    method = method.lower()
    if method == "mm":
        return standard_krylov(ops, r)
    if method == "eks":
        return compute_eks(ops, r)
    if method == "aeks":
        return compute_aeks(ops, r, m=m)
    raise ValueError(f"unknown method {method!r}")
