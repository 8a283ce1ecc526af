"""Exception types shared across the package."""


class KinpathError(Exception):
    """Base class for all library errors."""


class InvalidParameters(KinpathError, ValueError):
    """A physical parameter set violates one of its invariants."""


class PoleError(KinpathError, ValueError):
    """A function was evaluated at (or numerically on top of) a pole."""


class NoConvergence(KinpathError, ArithmeticError):
    """An iterative evaluation failed to reach its tolerance."""


class OverflowSignal(KinpathError, OverflowError):
    """Result would leave the representable floating point range."""


class CausticError(KinpathError, ValueError):
    """Real-time propagator evaluated at a focal time omega*T = k*pi."""


class DimensionMismatch(KinpathError, ValueError):
    pass


class IndexOutOfRange(KinpathError, IndexError):
    pass


class SingularMatrix(KinpathError, ValueError):
    pass


class MemoryGuard(KinpathError, MemoryError):
    """Requested grid exceeds the allowed number of points."""
