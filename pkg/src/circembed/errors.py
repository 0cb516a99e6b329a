"""Exception types shared across the package."""


class CircembedError(Exception):
    """Base class for circembed-specific failures."""


class NotPositiveDefiniteError(CircembedError):
    """Raised when no positive definite extension is found within the search cap."""

    def __init__(self, message, m_max=None, min_eig=None):
        super().__init__(message)
        self.m_max = m_max
        self.min_eig = min_eig


class SymmetryError(CircembedError):
    """Raised when a transform input lacks the even symmetry it must have."""


class QuadratureError(CircembedError):
    """Raised when a quadrature error estimate exceeds the requested tolerance."""


class ConvergenceError(CircembedError):
    """Raised when an iterative refinement fails to converge within its budget."""


class CapabilityError(CircembedError):
    """Raised when an operation needs a kernel capability (e.g. a spectral
    density) that the supplied kernel does not provide."""
