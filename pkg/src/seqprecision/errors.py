"""Exception types shared across the package."""


class DataValidationError(ValueError):
    """An observation failed basic validation (bad arm code, non-finite value)."""


class UndefinedEstimateError(ValueError):
    """An estimator was requested from a state with too little data."""


class BracketError(ValueError):
    """A root bracket does not contain a sign change."""


class ConvergenceError(RuntimeError):
    """An iterative routine exceeded its iteration budget."""


class ConfigError(ValueError):
    """A rule or simulation configuration is invalid."""
