"""Exception hierarchy shared by all krylovmor modules."""


class KrylovMORError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(KrylovMORError, ValueError):
    pass


class SingularMatrix(KrylovMORError):
    """A direct factorization met a (numerically) zero pivot."""


class SingularG22(SingularMatrix):
    """The conductance block of the non-capacitive nodes is singular.

    Usually means some node without capacitance has no resistive path to
    ground.
    """


class CapExceeded(KrylovMORError):
    pass


class ParseError(KrylovMORError, ValueError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class UnsupportedElement(ParseError):
    pass


class ManifestError(KrylovMORError, ValueError):
    pass


class MismatchedSweep(KrylovMORError, ValueError):
    pass


class PoleHit(KrylovMORError):
    def __init__(self, s):
        self.s = s
        super().__init__(f"sE - A is singular at s = {s!r}")


class Deflated(KrylovMORError):
    """The Krylov subspace was exhausted before reaching the requested order.

    The partial (still orthonormal) basis is attached as ``basis``.
    """

    def __init__(self, basis, requested):
        self.basis = basis
        self.rank = basis.rank
        self.requested = requested
        super().__init__(
            f"subspace exhausted at rank {self.rank} (requested {requested})")


class RegularizationError(KrylovMORError):
    pass
