"""Exception types shared across the package."""


class IngarchError(Exception):
    """Base class for all package errors."""


class ParameterError(IngarchError, ValueError):
    """A model or function parameter is outside its admissible range."""


class InvalidStateError(IngarchError, ValueError):
    """A recursion was fed a non-finite or out-of-domain state."""


class ExplosionError(IngarchError, RuntimeError):
    """An intensity exceeded the configured explosion cap."""


class NoContractionError(IngarchError, ValueError):
    """Contraction constants are not < 1, so no bound can be certified."""


class DegenerateDesignError(IngarchError, ValueError):
    """The OLS design matrix is singular or badly conditioned."""


class DataError(IngarchError, ValueError):
    """Malformed input data (bad counts, non-contiguous dates, ...)."""
