class FormatError(ValueError):
    """Binary file with a wrong magic, version or truncated payload."""


class InfeasibleError(ValueError):
    """Transmit power too low to meet Bob's SNR requirement."""


class ConfigError(ValueError):
    pass


class DivergenceError(RuntimeError):
    pass
