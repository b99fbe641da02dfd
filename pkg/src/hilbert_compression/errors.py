"""Exception hierarchy for hilbert_compression.

Every error carries a stable machine-readable ``category`` which the CLI
turns into an exit code and an ``error category=...`` line on stderr.
"""

from typing import Any, ClassVar


class CompressionError(Exception):
    """Base exception for all library errors."""

    category: ClassVar[str] = "internal"

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context


class InvalidParameterError(CompressionError):
    """A parameter is outside the domain of an operation."""

    category = "invalid-parameter"


class ConfigValidationError(CompressionError):
    """Run configuration failed validation; every invalid field is listed."""

    category = "config"

    def __init__(self, message: str, fields: list[str] | None = None, **context: Any) -> None:
        super().__init__(message, **context)
        self.fields = fields or []


class ResourceBudgetError(CompressionError):
    """Ball enumeration or a radius scan exceeded the memory budget."""

    category = "resource"

    def __init__(
        self,
        message: str,
        radius_reached: float | None = None,
        elements: int | None = None,
        **context: Any,
    ) -> None:
        super().__init__(message, **context)
        self.radius_reached = radius_reached
        self.elements = elements


class NumericError(CompressionError):
    """A Gram matrix is indefinite beyond tolerance."""

    category = "numeric"

    def __init__(
        self, message: str, worst_eigenvalue: float | None = None, **context: Any
    ) -> None:
        super().__init__(message, **context)
        self.worst_eigenvalue = worst_eigenvalue


class UnsupportedModelError(CompressionError):
    """The operation is not defined for this group model."""

    category = "unsupported-model"


class DegenerateInputError(CompressionError):
    """Input makes the construction degenerate (zero vector, constant embedding)."""

    category = "degenerate-input"


class PreconditionError(CompressionError):
    """A construction precondition fails at a specific element."""

    category = "precondition"

    def __init__(self, message: str, element: Any = None, **context: Any) -> None:
        super().__init__(message, **context)
        self.element = element


class CacheMismatchError(CompressionError):
    """Cache header does not match the requesting model."""

    category = "cache-mismatch"


class CacheIOError(CompressionError):
    """Cache file cannot be read or written."""

    category = "io"


class OutputIOError(CompressionError):
    """A result file cannot be written."""

    category = "io"


EXIT_CODES: dict[str, int] = {
    "internal": 1,
    "config": 2,
    "invalid-parameter": 2,
    "resource": 3,
    "numeric": 4,
    "degenerate-input": 4,
    "unsupported-model": 5,
    "io": 6,
    "cache-mismatch": 6,
    "precondition": 7,
}


def exit_code_for(category: str) -> int:
    """Map an error category to the CLI exit code."""
    return EXIT_CODES.get(category, 1)
