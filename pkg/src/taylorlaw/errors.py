"""Exception hierarchy shared by every module."""


class TaylorLawError(Exception):
    """Base class for all library errors."""


class ParameterError(TaylorLawError, ValueError):
    """An argument is outside its admissible range."""


class DomainError(TaylorLawError, ValueError):
    """The data do not support the requested statistic."""


class RegimeError(DomainError):
    """A theoretical limit was requested outside the regime where it holds."""


class DegenerateError(DomainError):
    """The estimate is undefined for these data (e.g. all top values tie)."""


class IllConditionedError(DomainError):
    """A log-ratio denominator is numerically zero."""


class ConvergenceError(TaylorLawError, RuntimeError):
    """An iterative routine failed to converge.

    ``diagnostics`` carries whatever the routine knew when it gave up.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class SolverError(ConvergenceError):
    """The threshold solver could not bracket or reach a root."""


class GenerationError(TaylorLawError, RuntimeError):
    """A constrained random structure could not be generated."""

    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


class ParseError(TaylorLawError, ValueError):
    """An input file line could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
