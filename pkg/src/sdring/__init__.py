"""Spectra of a disordered Sinai-Derrida ring, classical and with coherent hopping."""
from .errors import (
    ConfigError,
    ConvergenceFailure,
    EmptyAfterFilter,
    MemoryGuardError,
    NonParabolic,
    NoRootError,
    PairingAnomaly,
    SDRingError,
)
from .model import DisorderRealization, DistShape, ModelParams, rescale_field, sample_realization

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceFailure",
    "DisorderRealization",
    "DistShape",
    "EmptyAfterFilter",
    "MemoryGuardError",
    "ModelParams",
    "NoRootError",
    "NonParabolic",
    "PairingAnomaly",
    "SDRingError",
    "__version__",
    "rescale_field",
    "sample_realization",
]
