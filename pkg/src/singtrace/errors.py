"""Exception hierarchy shared by all modules.

Each class carries the command-line exit code it maps to, so the front end
never has to guess how a failure should be reported.
"""


class SingtraceError(Exception):
    exit_code = 1


class InvalidInputError(SingtraceError, ValueError):
    """Malformed model, measure, symbol or scenario data."""

    exit_code = 2


class ExpressionError(InvalidInputError):
    """The expression grammar rejected its input."""


class ModelDomainError(InvalidInputError):
    """A closed form was evaluated outside its domain or violated a model invariant."""


class DivergenceError(InvalidInputError):
    """A sum or integral was requested at or below its abscissa of convergence."""

    def __init__(self, message: str, abscissa: float | None = None):
        super().__init__(message)
        self.abscissa = abscissa


class ConsistencyError(SingtraceError):
    """Two independent evaluations of the same quantity disagree (broken model)."""


class PropertyFailure(SingtraceError):
    """A checked inequality or identity failed."""


class InconclusiveError(SingtraceError):
    """The data do not support a verdict (too short a grid, unstable counts)."""

    exit_code = 3


class InsufficientDataError(InconclusiveError):
    """Fewer samples or decades than an estimator requires."""


class DegenerateCrossingError(InconclusiveError):
    """An eigenvalue touches zero in a way refinement cannot resolve."""
