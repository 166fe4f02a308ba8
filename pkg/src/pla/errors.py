"""Exceptions shared across pipeline stages."""


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


class LengthMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass
