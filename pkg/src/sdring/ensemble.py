"""Disorder-ensemble drivers: sweeps, threshold bisection and aggregation."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConfigError, ConvergenceFailure, EmptyAfterFilter
from .lindblad import lindbladian_sparse, surrogate_realization
from .model import DisorderRealization, ModelParams, rescale_field, sample_realization
from .spectral import count_complex, eigenvalues, lindblad_spectrum
from .stochastic import build_W, transition_rates

log = logging.getLogger(__name__)

NO_TRANSITION = math.nan
LOW_MODES = 4
MAX_LINDBLAD_SWEEP_N = 64
SWEEP_AXES = ("f", "sigma_f", "c", "sigma_nu", "gamma", "T_bath")
_AXIS_FIELD = {"f": "f_bias"}


class ModelKind(str, Enum):
    STOCHASTIC = "stochastic"
    LINDBLAD = "lindblad"
    # classical W with bond rates dressed by coherent hopping
    SURROGATE = "surrogate"


class Observable(str, Enum):
    NCMPLX_FRACTION = "ncmplx_fraction"
    FC = "fc"
    SIGMA_CRITICAL = "sigma_critical"


def is_sentinel(value: float) -> bool:
    return math.isnan(value)


def realization_seed(master_seed: int, index: int) -> int:
    """Seed of realization ``index``; independent of grid position."""
    state = np.random.SeedSequence([int(master_seed), int(index)]).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def spectrum_tol(real: DisorderRealization) -> float:
    """Imaginary-part tolerance scaled by the relaxation bandwidth of the ring."""
    w_plus, w_minus = transition_rates(real)
    return 1e-8 * 2.0 * float(np.max(w_plus + np.roll(w_minus, 1)))


def relaxation_spectrum(real: DisorderRealization, params: ModelParams, model: ModelKind) -> np.ndarray:
    """Decay rates of the relaxation branch, sorted by (Re, Im)."""
    model = ModelKind(model)
    if model is ModelKind.LINDBLAD:
        return lindblad_spectrum(real, params).relaxation()
    if model is ModelKind.SURROGATE:
        real = surrogate_realization(real, params)
    lam = -eigenvalues(build_W(real))
    return lam[np.lexsort((lam.imag, lam.real))]


def ncmplx_fraction(real: DisorderRealization, params: ModelParams, model: ModelKind) -> float:
    lam = relaxation_spectrum(real, params, model)
    return count_complex(lam, spectrum_tol(real)) / real.N


def _lindblad_low_modes(real, params, k) -> np.ndarray:
    L = lindbladian_sparse(real, params)
    n = L.shape[0]
    nev = min(3 * k, n - 2)
    sigma = 1e-2 * float(np.mean(real.nu_x))
    try:
        vals, vecs = spla.eigs(L.tocsc(), k=nev, sigma=sigma, which="LM", tol=1e-13, ncv=min(n - 1, max(40, 2 * nev + 1)))
    except (spla.ArpackNoConvergence, RuntimeError) as exc:
        log.info("shift-invert failed (%s); falling back to dense", exc)
        return lindblad_spectrum(real, params).relaxation()
    N = real.N
    rho = vecs.reshape(N, N, -1)
    diag_weight = np.sum(np.abs(np.einsum("iik->ik", rho)) ** 2, axis=0) / np.sum(np.abs(vecs) ** 2, axis=0)
    lam = -vals[diag_weight > 0.5]
    return lam[np.lexsort((lam.imag, lam.real))]


def low_relaxation_modes(real: DisorderRealization, params: ModelParams, model: ModelKind, k: int = LOW_MODES) -> np.ndarray:
    """The ``k`` nonzero relaxation decay rates of smallest real part."""
    model = ModelKind(model)
    if model is ModelKind.LINDBLAD:
        lam = _lindblad_low_modes(real, params, k)
    else:
        lam = relaxation_spectrum(real, params, model)
    zero = int(np.argmin(np.abs(lam)))
    lam = np.delete(lam, zero)
    lam = lam[np.lexsort((lam.imag, lam.real))]
    return lam[:k]


def fc_predicate(real, params, model, k: int = LOW_MODES, tol_im: float | None = None) -> bool:
    """True when a conjugate pair sits among the k lowest nonzero relaxation modes."""
    if tol_im is None:
        tol_im = spectrum_tol(real)
    return bool(np.any(np.abs(low_relaxation_modes(real, params, model, k).imag) > tol_im))


def _bisect(pred: Callable[[float], bool], lo: float, hi: float, width: float) -> float:
    while hi - lo > width(hi):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def threshold_fc(
    real: DisorderRealization,
    params: ModelParams,
    model: ModelKind = ModelKind.STOCHASTIC,
    f_max: float = 1.0,
    rel_tol: float = 1e-3,
    abs_tol: float = 1e-12,
    f_start: float = 1e-6,
) -> float:
    """Smallest mean field at which the low relaxation modes turn complex.

    The realization's fluctuations are frozen and only the mean is moved.
    Resolution is ``max(abs_tol, rel_tol * f_c)``; ``NO_TRANSITION`` when the
    predicate is still false at ``f_max``.
    """
    tol_im = spectrum_tol(real)

    def pred(f):
        return fc_predicate(rescale_field(real, f, 1.0), params, model, tol_im=tol_im)

    lo, hi = 0.0, min(f_start, f_max)
    while not pred(hi):
        lo = hi
        if hi >= f_max:
            return NO_TRANSITION
        hi = min(2 * hi, f_max)
    fc = _bisect(pred, lo, hi, lambda h: max(abs_tol, rel_tol * h))
    probes = [fc * m for m in (1.5, 2.0, 4.0) if fc * m <= f_max]
    if not all(pred(f) for f in probes):
        log.warning("f_c predicate not monotone above %.3e", fc)
    return fc


def sigma_critical(
    real: DisorderRealization,
    params: ModelParams,
    f_bias: float,
    model: ModelKind = ModelKind.STOCHASTIC,
    sigma_max: float = 1.0,
    resolution: float = 1e-5,
) -> float:
    """Field disorder width above which a mode complex at zero width turns real.

    The realization's field fluctuations, of width ``params.sigma_f``, are
    stretched by a factor s; the returned value is ``s * params.sigma_f``.
    Counts exclude nothing explicitly: the zero mode and the even-N q = pi
    mode are real at every s and so never change the count.
    """
    base = params.sigma_f
    if base <= 0:
        raise ConfigError("sigma_critical needs a realization with sigma_f > 0")
    tol_im = spectrum_tol(real)

    def n_complex(s):
        lam = relaxation_spectrum(rescale_field(real, f_bias, s), params, model)
        return count_complex(lam, tol_im)

    n0 = n_complex(0.0)
    if n0 == 0:
        return 0.0

    def pred(sigma):
        return n_complex(sigma / base) < n0

    lo, hi = 0.0, min(base, sigma_max)
    while not pred(hi):
        lo = hi
        if hi >= sigma_max:
            return NO_TRANSITION
        hi = min(2 * hi, sigma_max)
    sc = _bisect(pred, lo, hi, lambda h: resolution)
    probes = [sc * m for m in (1.25, 1.5, 2.0) if sc * m <= sigma_max]
    if not all(pred(s) for s in probes):
        log.warning("sigma_critical predicate not monotone above %.3e", sc)
    return sc


@dataclass(frozen=True)
class ThresholdStats:
    per_realization: tuple[float, ...]
    mean: float
    median: float
    cumulative: tuple[float, ...]
    n_sentinel: int

    def quantiles(self) -> np.ndarray:
        n = len(self.cumulative)
        return np.arange(1, n + 1) / n


def aggregate(values: Sequence[float]) -> ThresholdStats:
    vals = [float(v) for v in values]
    good = np.array([v for v in vals if not is_sentinel(v)])
    if good.size == 0:
        raise EmptyAfterFilter("no finite thresholds to aggregate")
    return ThresholdStats(
        per_realization=tuple(vals),
        mean=float(good.mean()),
        median=float(np.median(good)),
        cumulative=tuple(np.sort(good).tolist()),
        n_sentinel=len(vals) - int(good.size),
    )


def evaluate(observable: Observable, params: ModelParams, model: ModelKind, f_bias: float | None = None) -> float:
    """One realization drawn from ``params`` -> one observable value."""
    real = sample_realization(params)
    observable = Observable(observable)
    if observable is Observable.NCMPLX_FRACTION:
        return ncmplx_fraction(real, params, model)
    if observable is Observable.FC:
        return threshold_fc(real, params, model)
    return sigma_critical(real, params, params.f_bias if f_bias is None else f_bias, model)


@dataclass(frozen=True)
class SweepSpec:
    model: ModelKind
    axis1: tuple[str, tuple[float, ...]]
    axis2: tuple[str, tuple[float, ...]]
    fixed: ModelParams
    realizations: int = 1
    observable: Observable = Observable.NCMPLX_FRACTION

    def __post_init__(self):
        object.__setattr__(self, "model", ModelKind(self.model))
        object.__setattr__(self, "observable", Observable(self.observable))
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        names = []
        for name, grid in (self.axis1, self.axis2):
            if name not in SWEEP_AXES:
                raise ConfigError(f"unknown sweep axis {name!r}; choose from {SWEEP_AXES}")
            g = np.asarray(grid, dtype=float)
            if g.size == 0:
                raise ConfigError(f"empty grid for axis {name}")
            d = np.diff(g)
            if g.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
                raise ConfigError(f"grid for axis {name} must be strictly monotone")
            names.append(name)
        if names[0] == names[1]:
            raise ConfigError("sweep axes must differ")
        if self.observable is Observable.FC and "f" in names:
            raise ConfigError("f is swept internally by the f_c threshold")
        if self.observable is Observable.SIGMA_CRITICAL and "sigma_f" in names:
            raise ConfigError("sigma_f is swept internally by the sigma_critical threshold")
        if self.model is ModelKind.LINDBLAD and self.fixed.N > MAX_LINDBLAD_SWEEP_N:
            raise ConfigError(f"Lindblad sweeps are limited to N <= {MAX_LINDBLAD_SWEEP_N}")


@dataclass(frozen=True)
class SweepRow:
    axis1: float
    axis2: float
    realization: int
    value: float


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow] = field(default_factory=list)

    def mean_grid(self) -> np.ndarray:
        g1, g2 = self.spec.axis1[1], self.spec.axis2[1]
        acc = np.full((len(g1), len(g2), self.spec.realizations), np.nan)
        pos1 = {v: i for i, v in enumerate(g1)}
        pos2 = {v: j for j, v in enumerate(g2)}
        for r in self.rows:
            acc[pos1[r.axis1], pos2[r.axis2], r.realization] = r.value
        with np.errstate(invalid="ignore"):
            counts = np.sum(~np.isnan(acc), axis=2)
            sums = np.nansum(acc, axis=2)
            return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def cell_params(spec: SweepSpec, v1: float, v2: float, realization: int) -> ModelParams:
    changes = {
        _AXIS_FIELD.get(spec.axis1[0], spec.axis1[0]): float(v1),
        _AXIS_FIELD.get(spec.axis2[0], spec.axis2[0]): float(v2),
        "seed": realization_seed(spec.fixed.seed, realization),
    }
    return spec.fixed.replace(**changes)


def _run_cell(task):
    spec, v1, v2, r = task
    try:
        return evaluate(spec.observable, cell_params(spec, v1, v2, r), spec.model)
    except (ConvergenceFailure, np.linalg.LinAlgError) as exc:
        raise ConvergenceFailure(
            f"cell {spec.axis1[0]}={v1}, {spec.axis2[0]}={v2}, realization {r}: {exc}"
        ) from exc


def worker_count(default: int = 1) -> int:
    raw = os.environ.get("SDRING_WORKERS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"SDRING_WORKERS must be an integer, got {raw!r}") from exc


def run_tasks(fn, tasks: list, workers: int | None = None) -> list:
    """Map ``fn`` over ``tasks`` in order, optionally across processes."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate the observable on every (cell, realization).

    Realization ``r`` uses the same seed in every cell, so along a width axis
    the disorder is one frozen realization stretched uniformly.
    """
    tasks = [
        (spec, v1, v2, r)
        for v1 in spec.axis1[1]
        for v2 in spec.axis2[1]
        for r in range(spec.realizations)
    ]
    values = run_tasks(_run_cell, tasks, workers)
    rows = [SweepRow(float(t[1]), float(t[2]), t[3], float(v)) for t, v in zip(tasks, values)]
    return SweepResult(spec, rows)


def _threshold_task(task):
    observable, params, model, f_bias = task
    return evaluate(observable, params, model, f_bias)


def threshold_table(
    params: ModelParams,
    observable: Observable,
    realizations: int,
    model: ModelKind = ModelKind.STOCHASTIC,
    f_bias: float | None = None,
    workers: int | None = None,
) -> list[tuple[int, float]]:
    """Per-realization thresholds as ``(seed, value)`` pairs."""
    if realizations < 1:
        raise ConfigError("realizations must be >= 1")
    observable = Observable(observable)
    if observable is Observable.NCMPLX_FRACTION:
        raise ConfigError("threshold tables need fc or sigma_critical")
    seeds = [realization_seed(params.seed, r) for r in range(realizations)]
    tasks = [(observable, params.replace(seed=s), ModelKind(model), f_bias) for s in seeds]
    return list(zip(seeds, run_tasks(_threshold_task, tasks, workers)))
