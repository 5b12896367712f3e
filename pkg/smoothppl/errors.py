"""
Exception hierarchy for the smoothppl package.
"""

from typing import Optional, Sequence


class SmoothPPLError(Exception):
    """Base class for every error raised by smoothppl."""


class ProgramSyntaxError(SmoothPPLError, SyntaxError):
    """
    Raised when program text does not follow the surface grammar.

    Attributes:
        line (int): 1-based line of the offending token
        col (int): 1-based column of the offending token
        expected (tuple): Token descriptions the parser would have accepted
    """

    def __init__(self, message: str, line: int, col: int, expected: Sequence[str] = ()):
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        detail = f"{message} at line {line}, column {col}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        super().__init__(detail)


class DivergedError(SmoothPPLError):
    """Raised when an execution exceeds its step budget."""

    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"execution exceeded the step budget of {budget}")


class DoubleSampleError(SmoothPPLError):
    """Raised when a random-variable name is sampled more than once in a run."""

    def __init__(self, name: object):
        self.name = name
        super().__init__(f"name {name} was sampled more than once")


class ZeroDensityError(SmoothPPLError):
    """Raised when an estimator meets a zero density."""

    def __init__(self, which: str, detail: Optional[str] = None):
        self.which = which
        message = f"{which} density is zero"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class TooManyNamesError(SmoothPPLError):
    """Raised when the quadrature oracle is asked for more than two names."""

    def __init__(self, count: int):
        self.count = count
        super().__init__(f"quadrature supports at most 2 sampled names, got {count}")


class PlanError(SmoothPPLError):
    """Raised for malformed reparameterisation plans."""


class InvariantViolation(SmoothPPLError):
    """Raised when an internal soundness assertion fails."""
