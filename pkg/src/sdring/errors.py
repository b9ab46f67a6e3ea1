"""Exception types shared across the package."""


class SDRingError(Exception):
    """Base class for package errors."""


class ConfigError(SDRingError, ValueError):
    """Invalid parameters or configuration."""


class MemoryGuardError(ConfigError):
    """Requested dense superoperator exceeds the size bound."""


class ConvergenceFailure(SDRingError, RuntimeError):
    """Eigensolver did not converge or failed its residual check."""


class PairingAnomaly(SDRingError, RuntimeError):
    """Complex eigenvalues do not come in conjugate pairs at the given tolerance."""


class NoRootError(SDRingError, ValueError):
    """No positive root exists for the requested equation."""


class NonParabolic(SDRingError, RuntimeError):
    """Small-q dispersion is not captured by the low-order fit."""


class EmptyAfterFilter(SDRingError, ValueError):
    """Nothing left to aggregate after removing sentinel values."""
