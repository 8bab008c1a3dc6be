"""Exception hierarchy.

Validation problems derive from :class:`ValueError` so callers (and the CLI)
can treat them as bad input; numerical and sampler failures derive from
:class:`RuntimeError`.
"""


class GwppError(Exception):
    """Base class for all package errors."""


class ValidationError(GwppError, ValueError):
    pass


class InvalidDimension(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class InvalidRequest(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class SchemaMismatch(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class DegenerateInput(ValidationError):
    pass


class AssumptionViolation(ValidationError):
    pass


class NotPositiveDefinite(GwppError, RuntimeError):
    pass


class NumericOverflow(GwppError, RuntimeError):
    pass


class InvalidState(GwppError, RuntimeError):
    pass


class SolverFailure(GwppError, RuntimeError):
    pass


class ChainAborted(GwppError, RuntimeError):
    """Raised by the chain runner; ``snapshot`` holds the state at failure."""

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot or {}
