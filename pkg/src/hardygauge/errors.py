"""Exception types raised across the package."""


class DomainError(ValueError):
    """A weight or function was evaluated outside its domain."""


class RegimeError(ValueError):
    """A condition was requested for exponents outside its regime."""


class UnsupportedVariantError(ValueError):
    """The requested variant of a condition or witness is not implemented."""
