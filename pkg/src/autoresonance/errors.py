"""Exception types shared across the package.

The hierarchy mirrors the error vocabulary of the module contracts: domain
errors for invalid inputs, numerical errors for solver failures (CLI exit
code 2), and specialised subclasses where callers need to react to a
particular condition programmatically.
"""

from __future__ import annotations


class AutoresonanceError(Exception):
    """Base class for all package-specific errors."""


class DomainError(AutoresonanceError, ValueError):
    """An argument lies outside the operation's documented domain."""


class SingularParameterError(DomainError):
    """A parameter value makes the requested quantity undefined (e.g. delta=0)."""


class ConstraintViolationError(DomainError):
    """A design or admissibility inequality is violated.

    The message names the failed inequality.
    """


class UnsupportedOrderError(DomainError):
    """A series order beyond the implemented recurrences was requested."""


class SeriesExistenceError(AutoresonanceError):
    """The requested asymptotic series does not exist.

    Attributes:
        condition: human-readable statement of the violated existence
            condition, e.g. ``"P''(sigma)*C(sigma) <= 0"``.
    """

    def __init__(self, condition: str):
        super().__init__(f"series does not exist: {condition}")
        self.condition = condition


class ContractError(AutoresonanceError):
    """Mutually inconsistent arguments (e.g. a root paired with a foreign series)."""


class NumericalError(AutoresonanceError):
    """A numerical procedure failed to converge or left its validity region."""
