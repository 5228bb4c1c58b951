"""Exception hierarchy.

The CLI maps each family onto a process exit code, so every error raised by
the library belongs to exactly one of these classes.
"""


class MCNError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ModelError(MCNError, ValueError):
    """Input model or argument violates a documented precondition."""

    exit_code = 1


class NumericalError(MCNError, RuntimeError):
    """A tolerance certificate (fixed point, nilpotency, agreement) failed."""

    exit_code = 2


class InconsistencyError(NumericalError):
    """Structural and subspace-based verdicts disagree."""


class EnumerationBudgetError(MCNError, RuntimeError):
    """Failure-class enumeration would exceed the configured budget."""

    exit_code = 3
