"""Exception hierarchy.

Two families matter to callers: ``ValidationError`` (bad input, CLI exit 1)
and ``NumericalError`` (a numerical method failed to meet its target, CLI
exit 2). Acceptance-style checks raise subclasses of ``CheckFailure``
(CLI exit 3).
"""


class RevTorusError(Exception):
    """Base class for all package errors."""


class ValidationError(RevTorusError, ValueError):
    pass


class NumericalError(RevTorusError, ArithmeticError):
    pass


class CheckFailure(RevTorusError, AssertionError):
    """A numerically tested statement did not hold."""


# profile validation
class NotPositive(ValidationError):
    pass


class NotMorse(ValidationError):
    pass


class RepeatedCriticalValue(ValidationError):
    pass


class NotImmersed(ValidationError):
    pass


class DomainError(ValidationError):
    pass


# numerics
class StepFailure(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class BoxTooSmall(NumericalError):
    pass


class DegenerateWindow(NumericalError):
    pass


class TailEstimateDominates(NumericalError):
    pass


class Saturated(NumericalError):
    pass


class NotGenerating(ValidationError):
    pass


# checks
class ConvexityViolation(CheckFailure):
    pass


class BoundViolation(CheckFailure):
    pass


class EndpointMismatch(CheckFailure):
    pass


class NonConvex(CheckFailure):
    pass


class PoorFit(CheckFailure):
    pass


class ConjugacyViolation(CheckFailure):
    pass


class NoConvergenceTrend(CheckFailure):
    pass


class InequalityViolated(CheckFailure):
    pass
