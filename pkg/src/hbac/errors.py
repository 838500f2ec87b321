"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad parameter or malformed input (CLI exit code 2)."""


class RangeError(ValidationError):
    """Parameter outside the supported numeric range."""


class DegenerateMarginalError(ValidationError):
    """A marginal population is non-positive, so the log-ratio polarization is undefined."""


class BoundViolationError(RuntimeError):
    """An asserted analytic bound was exceeded by the measured data (CLI exit code 3)."""
