"""Exception hierarchy shared by all modules."""


class ReactivePathsError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ReactivePathsError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateMaximum(ReactivePathsError, ValueError):
    """The potential has no non-degenerate maximum at the origin."""


class SignError(ReactivePathsError, ValueError):
    """A curvature or derivative has the wrong sign."""


class QuadratureFailure(ReactivePathsError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


class NoConvergence(ReactivePathsError, ArithmeticError):
    """Grid refinement stalled before reaching the tolerance."""


class IllConditioned(ReactivePathsError, ArithmeticError):
    """The discrete problem cannot be solved reliably in double precision."""


class PrecisionLoss(ReactivePathsError, ArithmeticError):
    """Catastrophic cancellation makes a closed form unreliable."""


class TooFewSamples(ReactivePathsError, ValueError):
    """A statistic needs more observations than were given."""


class HorizonExceeded(ReactivePathsError):
    """A trajectory ran for ``max_steps`` without being absorbed.

    Metastable workloads hit this legitimately, so the exception carries the
    partial result, if any, in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class BudgetExceeded(ReactivePathsError):
    """The attempt or iteration budget was exhausted."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class StiffnessFloor(ReactivePathsError):
    """The adaptive time step hit its floor on too many steps."""


class Extinction(ReactivePathsError):
    """Every splitting replica ended at the same level; no survivor remains.

    The splitting estimate of such a run is 0; it is kept in ``estimate``
    together with the number of completed ``iterations``.
    """

    def __init__(self, message, estimate=0.0, iterations=0):
        super().__init__(message)
        self.estimate = estimate
        self.iterations = iterations
