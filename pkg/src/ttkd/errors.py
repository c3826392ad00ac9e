"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto process exit codes: validation problems exit with 2,
numerical degeneracies with 3, and I/O failures (plain ``OSError``) with 4.
"""


class TtkdError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ValidationError(TtkdError):
    """Invalid arguments, indices, shapes, or configuration."""

    exit_code = 2


class BoundsError(ValidationError):
    """An index lies outside its valid range."""


class CapacityError(ValidationError):
    """A guarded dense materialization would exceed its size limit."""


class DataError(ValidationError):
    """Input data contains non-finite or otherwise unusable values."""


class SchemaError(ValidationError):
    """A configuration or results document violates its schema."""


class NumericsError(TtkdError):
    """Numerical degeneracy encountered during computation."""

    exit_code = 3


class DegenerateInputError(NumericsError):
    """Input is numerically degenerate (e.g. identically zero)."""


class SingularMatrixError(NumericsError):
    """A matrix required to be invertible is (numerically) singular."""


class IntegrationError(NumericsError):
    """Adaptive time stepping failed (step size underflow)."""
