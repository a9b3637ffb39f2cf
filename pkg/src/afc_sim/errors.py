"""Exception types shared across the simulator."""


class SimError(Exception):
    """Base class for simulator errors."""


class ConfigError(SimError):
    """Invalid or inconsistent scenario configuration (CLI exit code 2)."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class UndersampledError(SimError):
    """Requested sampling cannot resolve the modulation."""


class StepSizeError(SimError):
    """Rate equation step would violate the rate*dt stability bound."""


class GridWindowError(SimError):
    """Frequency window too narrow for the requested operation."""


class SpectralLeakageError(SimError):
    """Signal spectrum not contained in the transfer-function grid."""


class EchoWindowError(SimError):
    """Echo analysis window falls off the sampled time range."""
