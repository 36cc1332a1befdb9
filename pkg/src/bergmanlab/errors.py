"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument violates a documented precondition."""


class OutOfRange(ValueError):
    """A point, stencil, or map image leaves the domain it must stay in."""


class NonFiniteIntegrand(ValueError):
    """A quadrature integrand is NaN or infinite at some node."""


class IntegrabilityError(ValueError):
    """A weighted pairing diverges by log-tag exponent arithmetic."""


class NearSingularError(ArithmeticError):
    """A matrix inversion hit condition numbers beyond the trusted limit."""


class MetricInconsistencyError(ValueError):
    """A matrix field violates a structural invariant (e.g. det <= 0 off
    the declared singular set)."""


class DegenerateSectionError(ValueError):
    """A probe section has identically vanishing norm on the grid."""


class UnsupportedRankError(ValueError):
    """The operation is only implemented for the desk-scale rank."""


class ConditioningError(ArithmeticError):
    """Normal equations too ill-conditioned to solve reliably."""


class PreconditionError(ValueError):
    """A runtime-checked mathematical precondition failed."""
