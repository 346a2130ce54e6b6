"""Exception hierarchy.

Two families matter to callers: :class:`ParameterError` for bad inputs and
:class:`NumericalError` for computations that did not converge or hit a
singular point. The CLI maps them to exit codes 1 and 2.
"""


class DwellError(Exception):
    """Base class for all package errors."""


class ParameterError(DwellError, ValueError):
    """Invalid physical or numerical parameter."""


class DegenerateDecayError(ParameterError):
    """Decay constant would be nonpositive (delta == 0 or Im(lambda) <= 0)."""


class DomainError(ParameterError):
    """Argument outside the domain of the operation."""


class StateError(DwellError, ValueError):
    """A density matrix or Bloch state violates its invariants."""


class NumericalError(DwellError, ArithmeticError):
    """Numerical procedure failed."""


class ConvergenceError(NumericalError):
    """Time integration did not settle."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SingularDenominatorError(NumericalError):
    """Closed-form expression hit an exact zero denominator."""


class DegenerateWindowError(NumericalError):
    """Measurement window makes the weak value ill-defined."""


class FitDomainError(NumericalError):
    """Exponential fit window is empty or overlaps a recurrence."""
