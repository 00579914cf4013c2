class ConfigurationError(ValueError):
    """Invalid code, channel or experiment parameters."""


class DomainError(ValueError):
    """Argument outside a function's mathematical domain."""
