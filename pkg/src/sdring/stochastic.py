"""Classical rate-matrix machinery for the disordered ring.

Convention: ``W`` acts on probability column vectors, ``W[(x+1) % N, x]`` is
the forward rate across bond ``x`` and ``W[x, (x+1) % N]`` the backward one.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, NoRootError
from .model import DisorderRealization, DistShape

# Returned by F_function when lambda sits on an eigenvalue of H_W.
POLE = -math.inf


def transition_rates(real: DisorderRealization) -> tuple[np.ndarray, np.ndarray]:
    half = 0.5 * real.f_x
    return real.nu_x * np.exp(half), real.nu_x * np.exp(-half)


def _ring_matrix(diag: np.ndarray, forward: np.ndarray, backward: np.ndarray) -> np.ndarray:
    N = len(diag)
    idx = np.arange(N)
    nxt = (idx + 1) % N
    M = np.zeros((N, N))
    M[idx, idx] = diag
    np.add.at(M, (nxt, idx), forward)
    np.add.at(M, (idx, nxt), backward)
    return M


def build_W(real: DisorderRealization) -> np.ndarray:
    w_plus, w_minus = transition_rates(real)
    diag = -(w_plus + np.roll(w_minus, 1))
    return _ring_matrix(diag, w_plus, w_minus)


def _leading_order_diagonal(real: DisorderRealization) -> np.ndarray:
    nu_avg = real.nu_x.mean()
    f = real.f_bias
    return (real.nu_x + np.roll(real.nu_x, 1)) + 0.5 * nu_avg * (real.f_x - np.roll(real.f_x, 1)) + 0.25 * nu_avg * f**2


def build_W_leading_order(real: DisorderRealization) -> np.ndarray:
    """``W`` with the expanded diagonal that pairs with :func:`build_HW`.

    Off-diagonal rates keep their exact exponential form.
    """
    w_plus, w_minus = transition_rates(real)
    return _ring_matrix(-_leading_order_diagonal(real), w_plus, w_minus)


def build_HW(real: DisorderRealization) -> np.ndarray:
    """Symmetric surrogate of ``W``: same diagonal magnitude, hopping ``-nu_x``."""
    return _ring_matrix(_leading_order_diagonal(real), -real.nu_x, -real.nu_x)


def clean_spectrum_W(w_plus: float, w_minus: float, N: int) -> np.ndarray:
    """Eigenvalues of the uniform ring ``W`` for ``q = 2 pi k / N``."""
    q = 2 * np.pi * np.arange(N) / N
    return -(w_plus + w_minus) * (1 - np.cos(q)) - 1j * (w_plus - w_minus) * np.sin(q)


def determinant_identity_residual(real: DisorderRealization, lam: complex) -> float:
    """Relative mismatch of det(lam + W) against det(lam - H_W) minus the bias term."""
    N = real.N
    if N > 12:
        raise ConfigError("determinant identity check is limited to N <= 12")
    total_f = float(np.sum(real.f_x))
    if abs(total_f) / 2 > 700:
        raise OverflowError("N*f too large for cosh")
    eye = np.eye(N)
    lhs = np.linalg.det(lam * eye + build_W_leading_order(real))
    rhs = np.linalg.det(lam * eye - build_HW(real))
    rhs -= 2.0 * (math.cosh(total_f / 2) - 1.0) * np.prod(-real.nu_x)
    return float(abs(lhs - rhs) / (abs(lhs) + abs(rhs) + np.finfo(float).eps))


def geometric_mean(values) -> float:
    return float(np.exp(np.mean(np.log(values))))


def F_function(epsilons, nu_avg: float, lam: float, skip_lowest: bool = False) -> float:
    """(1/N) sum_k ln|(lam - eps_k)/nu_avg|, or ``POLE`` on an eigenvalue.

    ``skip_lowest`` drops the band-bottom eigenvalue (the trivial zero mode);
    the normalization stays 1/N with N the full count.
    """
    eps = np.sort(np.asarray(epsilons, dtype=float))
    n = len(eps)
    if skip_lowest:
        eps = eps[1:]
    gaps = np.abs(lam - eps)
    if gaps.size and gaps.min() < 1e-300:
        return POLE
    return float(np.sum(np.log(gaps / nu_avg)) / n)


def kappa_envelope(lam, f, f_c, sigma_nu, nu, alpha0, alphac):
    """Three-term inverse-localization-length envelope near the band bottom."""
    lam = np.asarray(lam, dtype=float)
    return alpha0 * f_c - alphac * ((f - f_c) / f_c) * np.sqrt(lam / nu) + sigma_nu**2 / (8 * nu**3) * lam


def fc_analytic(sigma_f: float, dist_shape: DistShape | str = DistShape.BOX) -> float:
    """Quarter of the field variance, with the variance implied by the shape."""
    shape = DistShape(dist_shape)
    var = sigma_f**2 / 12.0 if shape is DistShape.BOX else sigma_f**2
    return var / 4.0


def mu_gaussian(f: float, sigma_f: float) -> float:
    return 2.0 * f / sigma_f**2


def mu_exponent(f_samples) -> float:
    """Positive root of mean(exp(-mu f_x)) = 1."""
    f = np.asarray(f_samples, dtype=float)
    if f.mean() <= 0 or np.ptp(f) == 0 or f.min() >= 0:
        raise NoRootError("need positive mean field with some negative values")

    def g(mu):
        # log-sum-exp keeps large mu finite
        a = -mu * f
        m = a.max()
        return m + math.log(np.mean(np.exp(a - m)))

    hi = 1.0 / abs(f.min())
    while g(hi) <= 0:
        hi *= 2.0
    lo = hi / 2.0
    while g(lo) > 0 and lo > 1e-300:
        lo /= 2.0
    return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
