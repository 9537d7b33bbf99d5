"""Exception hierarchy shared by every module."""


class HuberRKHSError(Exception):
    """Base class for all package errors."""


class ContractViolation(HuberRKHSError, ValueError):
    """An input broke an operation's precondition (shape, sign, emptiness)."""


class PreconditionError(HuberRKHSError, ValueError):
    """A theorem check was asked to run outside its hypotheses."""


class NumericalError(HuberRKHSError, ArithmeticError):
    """A factorization failed even after jitter escalation."""


class NumericalPSDError(NumericalError):
    """A quadratic form that should be nonnegative came out clearly negative."""


class DivergenceError(NumericalError):
    """An objective became non-finite during optimization."""


class OptimizationError(NumericalError):
    """A line search could not make progress."""


class InfiniteMomentError(HuberRKHSError, ValueError):
    """A requested moment of the noise distribution does not exist."""


class QuadratureError(NumericalError):
    """An integral produced a non-finite value."""
