"""Exception types shared across the package."""


class TwoStageError(Exception):
    """Base class for all package errors."""


class SchemaError(TwoStageError, ValueError):
    """A feature schema is malformed."""


class DatasetError(TwoStageError, ValueError):
    """A comparison dataset could not be parsed or violates its schema."""


class ModelFormatError(TwoStageError, ValueError):
    """A model or linear-model file is malformed or violates model invariants."""


class LinkError(TwoStageError, ValueError):
    """A probabilistic operation was requested on a non-probabilistic link,
    or a probability argument is outside (0, 1)."""


class FitError(TwoStageError, ArithmeticError):
    """Numerical failure while fitting (non-finite loss, diverged steps)."""
