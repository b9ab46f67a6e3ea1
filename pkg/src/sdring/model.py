"""Model parameters, derived scales and disorder realizations.

Bond ``x`` connects site ``x`` to site ``x+1`` (mod N).  Widths ``sigma_f`` and
``sigma_nu`` are full widths for the Box shape and standard deviations for
the Gaussian shape.  Time is measured in units where ``nu`` sets the rate.
"""
from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError

PARAM_KEYS = ("N", "nu", "c", "gamma", "f_bias", "sigma_f", "sigma_nu", "T_bath", "dist_shape", "seed")


class DistShape(str, Enum):
    BOX = "Box"
    GAUSSIAN = "Gaussian"


class HierarchyWarning(UserWarning):
    """Parameters leave the regime c, sigma_E << nu << T_bath."""


@dataclass(frozen=True)
class ModelParams:
    N: int = 32
    nu: float = 1.0
    c: float = 0.0
    gamma: float = 0.0
    f_bias: float = 0.0
    sigma_f: float = 0.0
    sigma_nu: float = 0.0
    T_bath: float = 200.0
    dist_shape: DistShape = DistShape.BOX
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dist_shape", DistShape(self.dist_shape))
        if int(self.N) != self.N or self.N < 3:
            raise ConfigError(f"N must be an integer >= 3, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if not self.nu > 0:
            raise ConfigError("nu must be positive")
        if self.c < 0 or self.gamma < 0:
            raise ConfigError("c and gamma must be non-negative")
        if self.sigma_f < 0 or self.sigma_nu < 0:
            raise ConfigError("disorder widths must be non-negative")
        if not self.T_bath > 0:
            raise ConfigError("T_bath must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        object.__setattr__(self, "seed", int(self.seed))
        if self.c >= self.nu or self.T_bath <= self.nu:
            warnings.warn(
                f"outside assumed hierarchy c << nu << T_bath (c={self.c}, nu={self.nu}, T_bath={self.T_bath})",
                HierarchyWarning,
                stacklevel=3,
            )

    def replace(self, **changes) -> "ModelParams":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", HierarchyWarning)
            return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["dist_shape"] = self.dist_shape.value
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelParams":
        unknown = set(data) - set(PARAM_KEYS)
        if unknown:
            raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "ModelParams":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class DerivedScales:
    sigma_E: float
    eta: float
    E_bias: float


@dataclass(frozen=True)
class RegimeLabel:
    classical_high_T: bool
    quantum_high_T: bool
    sinai_regime: bool


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    """Per-bond rates and fields plus the site potential.

    ``E_x[x] = -(U[x+1] - U[x])`` and ``f_x`` sums to ``N * f_bias``.
    """

    nu_x: np.ndarray
    f_x: np.ndarray
    U: np.ndarray
    E_x: np.ndarray
    f_bias: float

    def __post_init__(self):
        for name in ("nu_x", "f_x", "U", "E_x"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def N(self) -> int:
        return len(self.nu_x)

    @classmethod
    def from_arrays(cls, nu_x, f_x, U=None) -> "DisorderRealization":
        """Build a realization from explicit bond arrays; ``f_bias`` is the mean of ``f_x``."""
        nu_x = np.asarray(nu_x, dtype=float)
        f_x = np.asarray(f_x, dtype=float)
        U = np.zeros_like(nu_x) if U is None else np.asarray(U, dtype=float)
        return cls(nu_x, f_x, U, potential_drops(U), float(np.mean(f_x)))


def potential_drops(U: np.ndarray) -> np.ndarray:
    return -(np.roll(U, -1) - U)


def derive_scales(params: ModelParams) -> DerivedScales:
    return DerivedScales(
        sigma_E=params.sigma_f * params.T_bath,
        eta=params.nu / (2.0 * params.T_bath),
        E_bias=params.T_bath * params.f_bias,
    )


def classify_regime(params: ModelParams) -> RegimeLabel:
    eta = derive_scales(params).eta
    return RegimeLabel(
        classical_high_T=params.sigma_f < 1.0,
        quantum_high_T=eta < 1.0,
        sinai_regime=eta > params.sigma_f,
    )


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; substreams come from ``SeedSequence.spawn``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _standard_variates(rng: np.random.Generator, shape: DistShape, n: int) -> np.ndarray:
    if shape is DistShape.BOX:
        return rng.random(n) - 0.5
    return rng.standard_normal(n)


def sample_realization(params: ModelParams) -> DisorderRealization:
    """Draw one realization, deterministic in ``params.seed``.

    Standardized variates are drawn in a fixed order before scaling, so two
    parameter sets sharing a seed give realizations that differ only by a
    uniform stretch of each disorder field.
    """
    if params.sigma_nu >= 2.0 * params.nu:
        raise ConfigError("sigma_nu >= 2 nu would allow non-positive bond rates")
    N = params.N
    rng = make_rng(params.seed)
    z_nu = _standard_variates(rng, params.dist_shape, N)
    z_f = _standard_variates(rng, params.dist_shape, N)
    if params.dist_shape is DistShape.BOX:
        z_U = rng.random(N)
    else:
        z_U = rng.standard_normal(N)

    nu_x = params.nu + params.sigma_nu * z_nu
    if np.any(nu_x <= 0):
        raise ConfigError("sampled a non-positive bond rate; reduce sigma_nu")
    f_raw = params.sigma_f * z_f
    f_x = params.f_bias + (f_raw - f_raw.mean())
    U = derive_scales(params).sigma_E * z_U
    return DisorderRealization(nu_x, f_x, U, potential_drops(U), float(params.f_bias))


def rescale_field(real: DisorderRealization, new_f: float, new_scale: float) -> DisorderRealization:
    """Set the mean field to ``new_f`` and stretch its fluctuations by ``new_scale``."""
    dev = real.f_x - real.f_x.mean()
    f_x = new_f + new_scale * dev
    return DisorderRealization(real.nu_x, f_x, real.U, real.E_x, float(new_f))
