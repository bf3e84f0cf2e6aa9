"""Exception types shared across the package."""


class BernmarkError(Exception):
    """Base class for computation failures raised by this package."""


class NonConvergence(BernmarkError):
    """An iterative solve exhausted its budget or hit an ill-conditioned system."""


class InternalInconsistency(BernmarkError):
    """Two independent computation routes disagree beyond tolerance."""


class ResolutionTooCoarse(BernmarkError):
    """Sign-change bracketing could not isolate the critical points."""


class DegenerateGrid(BernmarkError):
    """A discretized constraint set failed to bound the optimization."""


class ComplexSpectrum(BernmarkError):
    """A matrix has genuinely complex eigenvalues; the real-spectrum pipeline
    does not apply and the sharp constant cannot be computed here."""


class MarginViolated(BernmarkError):
    """A shifted eigenvalue -lambda - eps is not strictly positive."""


class NoFeasibleDirection(BernmarkError):
    """No polynomial in the unit ball satisfies p'(0) - eps*p(0) > 0."""
