"""Exception types shared across the package."""


class SpinMagnusError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SpinMagnusError):
    """Invalid or unreadable run configuration."""


class StepFailureError(SpinMagnusError):
    """A time step could not be completed (e.g. singular implicit solve)."""

    def __init__(self, message, step=None, method=None):
        super().__init__(message)
        self.step = step
        self.method = method


class ExpmError(SpinMagnusError):
    """Matrix-exponential evaluation failed (e.g. singular Pade denominator)."""


class QuadratureError(SpinMagnusError):
    """Adaptive quadrature failed to meet its tolerances."""
