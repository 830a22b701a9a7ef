"""Projection, moments, frequency sweeps and the per-port reduction pipeline."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .descriptor import DenseSystem
from .exceptions import Deflated, DimensionMismatch, MismatchedSweep, PoleHit, SingularMatrix
from .krylov import build_basis
from .sparse import as_block

DEFAULT_OMEGA_MIN = 1.0
DEFAULT_OMEGA_MAX = 1e12
DEFAULT_POINTS = 200


class ReducedModel(DenseSystem):
    """Dense reduced model ``(E_r, A_r, B_r, L_r, D)`` with its provenance."""

    def __init__(self, E, A, B, L, D, method, source_dims, schedule=(), solve_counts=None,
                 input_names=None, output_names=None):
        super().__init__(E, A, B, L, D)
        self.input_names = list(input_names) if input_names else None
        self.output_names = list(output_names) if output_names else None
        self.method = method
        self.source_dims = tuple(source_dims)
        self.schedule = list(schedule)
        self.solve_counts = dict(solve_counts or {})
        for name, X in (("E", self.E), ("A", self.A), ("B", self.B), ("L", self.L), ("D", self.D)):
            if not np.all(np.isfinite(X)):
                raise ValueError(f"reduced {name} has non-finite entries")

    def input_subsystem(self, i):
        names = [self.input_names[i]] if self.input_names else None
        return ReducedModel(self.E, self.A, self.B[:, [i]], self.L, self.D[:, [i]],
                            self.method, self.source_dims, self.schedule, self.solve_counts,
                            names, self.output_names)


def reduce(sys, basis):
    """Congruence projection ``(V^T E V, V^T A V, V^T B, L V, D)``.

    Products with ``A`` use the system's own ``apply_A`` so regularized
    models are reduced without forming their dense system matrix.
    """
    V = basis.V if hasattr(basis, "V") else as_block(basis)
    if V.shape[0] != sys.order:
        raise DimensionMismatch(f"basis has {V.shape[0]} rows, system order is {sys.order}")
    Er = V.T @ sys.apply_E(V)
    Ar = V.T @ sys.apply_A(V)
    Br = V.T @ sys.B_dense
    Lr = sys.L_dense @ V
    method = getattr(basis, "method", "custom")
    return ReducedModel(Er, Ar, Br, Lr, sys.D, method,
                        (sys.order, sys.n_inputs, sys.n_outputs),
                        getattr(basis, "schedule", ()),
                        getattr(basis, "solve_counts", None),
                        getattr(sys, "input_names", None), getattr(sys, "output_names", None))


def moments(sys, k):
    """Taylor coefficients of ``H(s)`` at ``s = 0``: ``H(s) = sum_i M_i s^i``.

    ``M_i = -L (A^{-1} E)^i A^{-1} B``, plus ``D`` for ``i = 0``.
    """
    L = sys.L_dense
    X = sys.solve_A(sys.B_dense)
    out = []
    for i in range(k):
        Mi = -(L @ X)
        if i == 0:
            Mi = Mi + sys.D
        out.append(Mi)
        if i + 1 < k:
            X = sys.solve_A(sys.apply_E(X))
    return out


def markov_parameters(sys, k):
    """Expansion coefficients at infinity, ``L (E^{-1} A)^i E^{-1} B`` for ``i < k``."""
    L = sys.L_dense
    Y = sys.solve_E(sys.B_dense)
    out = []
    for i in range(k):
        out.append(L @ Y)
        if i + 1 < k:
            Y = sys.solve_E(sys.apply_A(Y))
    return out


@dataclass
class FrequencySweep:
    """Transfer-function samples ``H(j omega)`` on a fixed angular-frequency grid.

    ``values`` has shape ``(npoints, q, p)``; points where ``sE - A`` was
    singular hold NaN and are listed in ``skipped``.
    """

    omega: np.ndarray
    values: np.ndarray = None
    skipped: list = field(default_factory=list)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega.ndim != 1 or np.any(np.diff(np.abs(self.omega)) <= 0):
            raise ValueError("sweep points must be strictly increasing in |omega|")

    @classmethod
    def logspace(cls, omega_min=DEFAULT_OMEGA_MIN, omega_max=DEFAULT_OMEGA_MAX,
                 points=DEFAULT_POINTS):
        return cls(np.logspace(np.log10(omega_min), np.log10(omega_max), points))

    @property
    def s(self):
        return 1j * self.omega

    def empty(self):
        return FrequencySweep(self.omega.copy())

    @property
    def filled(self):
        return self.values is not None


def transfer_function(sys, sweep):
    """Evaluate ``H(s)`` at every sweep point, factoring ``sE - A`` per point."""
    out = sweep.empty()
    values = np.empty((len(out.omega), sys.n_outputs, sys.n_inputs), dtype=complex)
    B, L = sys.B_dense, sys.L_dense
    for k, s in enumerate(out.s):
        try:
            X = sys.resolvent_solve(s, B)
        except SingularMatrix:
            values[k] = np.nan
            out.skipped.append(k)
            continue
        values[k] = L @ X + sys.D
    out.values = values
    return out


def evaluate(sys, s):
    """``H(s)`` at a single point; raises :class:`PoleHit` at a pole."""
    try:
        return sys.frequency_response(s)
    except SingularMatrix:
        raise PoleHit(s) from None


def simo_split(sys):
    """One single-input subsystem per input column, sharing ``E``, ``A``, ``L``."""
    if sys.n_inputs == 1:
        return [sys]
    return [sys.input_subsystem(i) for i in range(sys.n_inputs)]


@dataclass
class PortResult:
    index: int
    rom: ReducedModel = None
    basis: object = None
    deflated: bool = False
    error: str = None


@dataclass
class PerPortReduction:
    sweep: FrequencySweep
    ports: list

    @property
    def roms(self):
        return [pr.rom for pr in self.ports]


def _reduce_one(index, sub, method, r, m, sweep):
    result = PortResult(index)
    try:
        basis = build_basis(sub, method, r, m=m)
    except Deflated as exc:
        basis = exc.basis
        result.deflated = True
    result.basis = basis
    result.rom = reduce(sub, basis)
    column = transfer_function(result.rom, sweep)
    if column.skipped:
        result.error = f"poles hit at sweep indices {column.skipped}"
    return result, column


def default_workers(p):
    return max(1, min(p, os.cpu_count() or 1))


def reduce_per_port(sys, method, r, m=3, sweep=None, workers=None):
    """Reduce each input port separately and concatenate the reduced columns.

    Every port gets its own basis of order ``r`` built from its own input
    column; all ports share the system's factorizations, which are built
    before the workers start.  Results are assembled in port order, so the
    output does not depend on ``workers``.
    """
    sweep = sweep if sweep is not None else FrequencySweep.logspace()
    subsystems = simo_split(sys)
    workers = default_workers(len(subsystems)) if workers is None else max(1, int(workers))
    sys.prepare(backward=method.lower() != "mm")

    def job(i):
        return _reduce_one(i, subsystems[i], method, r, m, sweep)

    if workers == 1:
        results = [job(i) for i in range(len(subsystems))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(len(subsystems))))

    out = sweep.empty()
    out.values = np.concatenate([col.values for _, col in results], axis=2)
    out.skipped = sorted({k for _, col in results for k in col.skipped})
    return PerPortReduction(out, [pr for pr, _ in results])


def max_error(H, H_red):
    """Largest entry magnitude of ``H_red(s) - H(s)`` over the sweep.

    Points skipped in either sweep are ignored.
    """
    if H.omega.shape != H_red.omega.shape or not np.array_equal(H.omega, H_red.omega):
        raise MismatchedSweep("sweeps are evaluated at different points")
    if H.values.shape != H_red.values.shape:
        raise MismatchedSweep(f"value shapes differ: {H.values.shape} vs {H_red.values.shape}")
    diff = np.abs(H_red.values - H.values)
    if not diff.size:
        return 0.0
    return float(np.nanmax(diff)) if np.any(np.isfinite(diff)) else float("nan")


def error_per_port(H, H_red):
    """``max_error`` restricted to each input column."""
    return [max_error(_column(H, i), _column(H_red, i)) for i in range(H.values.shape[2])]


def _column(sweep, i):
    out = sweep.empty()
    out.values = sweep.values[:, :, [i]]
    return out
