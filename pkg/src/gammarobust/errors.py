"""Exception hierarchy shared by all modules.

The CLI maps each class to a distinct exit code.
"""


class GammaRobustError(Exception):
    """Base class for all package errors."""


class DomainError(GammaRobustError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class ResourceError(GammaRobustError, RuntimeError):
    """An enumeration or search would exceed its configured cap."""


class ParseError(GammaRobustError, ValueError):
    """An instance file does not match its expected layout."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class OracleError(GammaRobustError, RuntimeError):
    """A nominal oracle failed while solving a candidate subproblem."""

    def __init__(self, candidate, cause: BaseException):
        self.candidate = candidate
        self.cause = cause
        super().__init__(f"oracle failed on candidate {candidate!r}: {cause}")


class VerificationError(GammaRobustError, AssertionError):
    """A reformulation disagreed with brute-force enumeration."""
