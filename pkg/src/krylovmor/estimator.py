"""Estimator-style facade over the reduction pipeline.

``fit`` takes a system (or netlist text / path) instead of a feature
matrix, ``predict`` evaluates the reduced transfer function at angular
frequencies and ``transform`` projects full-order states onto the basis.
"""

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .circuit import assemble_mna, detect_singularity, parse_netlist
from .descriptor import LinearSystem
from .exceptions import Deflated, DimensionMismatch
from .krylov import build_basis
from .reduction import FrequencySweep, evaluate, reduce, reduce_per_port
from .regularize import regularize

_METHODS = ("mm", "eks", "aeks")


def _as_system(X):
    if isinstance(X, LinearSystem):
        return X
    if isinstance(X, Path) or (isinstance(X, str) and "\n" not in X and Path(X).is_file()):
        return assemble_mna(parse_netlist(Path(X).read_text()))
    if isinstance(X, str):
        return assemble_mna(parse_netlist(X))
    raise TypeError(f"expected a LinearSystem, netlist text or path, got {type(X).__name__}")


class KrylovReducer(BaseEstimator):
    """Moment-matching reduction by standard, extended or asymmetric Krylov bases.

    Parameters
    ----------
    method : {"mm", "eks", "aeks"}
        Subspace to project onto.
    order : int
        Reduced order, per port unless ``per_port=False``.
    modulo : int
        AEKS interleaving: one block of the denser direction per ``modulo``
        iterations.
    per_port : bool
        Reduce each input separately and superpose the results.
    workers : int or None
        Thread count for the per-port pipeline.

    Attributes
    ----------
    system_ : LinearSystem
        The system the basis was built for (regularized if ``E`` was singular).
    roms_ : list of ReducedModel
        One reduced model per port, or a single one.
    bases_ : list of ProjectionBasis
    n_inputs_, n_outputs_ : int
    singular_E_ : bool
    """

    def __init__(self, method="eks", order=8, modulo=3, per_port=True, workers=None):
        self.method = method
        self.order = order
        self.modulo = modulo
        self.per_port = per_port
        self.workers = workers

    def _validate_params(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if int(self.order) < 1:
            raise ValueError("order must be positive")
        if int(self.modulo) < 1:
            raise ValueError("modulo must be >= 1")

    def fit(self, X, y=None):
        """Build the projection basis and reduced model(s) for system ``X``."""
        self._validate_params()
        sys = _as_system(X)
        self.singular_E_ = bool(getattr(sys, "singular_E", False))
        if self.singular_E_:
            _, n2 = detect_singularity(sys)
            self.n_eliminated_ = len(n2)
            sys = regularize(sys)
        else:
            self.n_eliminated_ = 0
        self.system_ = sys
        self.n_inputs_ = sys.n_inputs
        self.n_outputs_ = sys.n_outputs
        self.deflated_ = False
        if self.per_port:
            # the sweep is not needed here; predict evaluates the ROMs itself
            result = reduce_per_port(sys, self.method, self.order, m=self.modulo,
                                     sweep=FrequencySweep(np.array([1.0])),
                                     workers=self.workers)
            self.roms_ = result.roms
            self.bases_ = [pr.basis for pr in result.ports]
            self.deflated_ = any(pr.deflated for pr in result.ports)
        else:
            try:
                basis = build_basis(sys, self.method, self.order, m=self.modulo)
            except Deflated as exc:
                basis, self.deflated_ = exc.basis, True
            self.bases_ = [basis]
            self.roms_ = [reduce(sys, basis)]
        return self

    def predict(self, omega):
        """Reduced transfer function at angular frequencies, shape ``(len(omega), q, p)``."""
        check_is_fitted(self, "roms_")
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if omega.ndim != 1 or not np.all(np.isfinite(omega)):
            raise ValueError("omega must be a 1-D array of finite frequencies")
        out = np.empty((len(omega), self.n_outputs_, self.n_inputs_), dtype=complex)
        for k, w in enumerate(omega):
            out[k] = np.hstack([evaluate(rom, 1j * w) for rom in self.roms_])
        return out

    def transform(self, X):
        """Project full-order states (columns of ``X``) onto the basis.

        Returns one ``(k, ncols)`` array per basis.
        """
        check_is_fitted(self, "bases_")
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != self.system_.order:
            raise DimensionMismatch(f"states have {X.shape[0]} rows, system order is "
                                    f"{self.system_.order}")
        coords = [b.V.T @ X for b in self.bases_]
        return coords[0] if len(coords) == 1 else coords

    def inverse_transform(self, Z, port=0):
        """Lift reduced coordinates back to the full state space."""
        check_is_fitted(self, "bases_")
        return self.bases_[port].V @ np.asarray(Z)

    @property
    def solve_counts_(self):
        check_is_fitted(self, "bases_")
        return {k: sum(b.solve_counts[k] for b in self.bases_) for k in ("A", "E")}
