"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid combination of sizes, methods or settings."""


class PathRejectionError(FloatingPointError):
    """Non-finite values appeared during path simulation."""

    def __init__(self, message, count=0):
        super().__init__(message)
        self.count = count


class InsufficientDataError(ValueError):
    """Too few runs to form an error estimate."""
