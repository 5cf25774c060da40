"""Exception types shared across the package."""


class DataError(ValueError):
    """Raised when user-supplied data (files, configs, instances) is unusable."""
