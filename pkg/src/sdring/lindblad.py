"""Minimal Lindbladian of the quantized ring and its clean-ring analytics.

Density-matrix element ``rho[n, m]`` sits at flat index ``n * N + m``; with
that row-major layout ``vec(A rho B) = kron(A, B.T) @ vec(rho)``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, MemoryGuardError
from .model import DisorderRealization, ModelParams
from .stochastic import transition_rates

MAX_DENSE_N = 96


def _shift(N: int) -> sp.csr_matrix:
    """Translation D = sum_x |x+1><x| on the ring."""
    idx = np.arange(N)
    return sp.csr_matrix((np.ones(N), ((idx + 1) % N, idx)), shape=(N, N))


def build_hamiltonian(real: DisorderRealization, c: float) -> np.ndarray:
    N = real.N
    D = _shift(N).toarray()
    return (c / 2) * (D + D.T) + np.diag(real.U).astype(complex)


def _left(A, N):
    return sp.kron(A, sp.identity(N), format="csr")


def _right(B, N):
    return sp.kron(sp.identity(N), B.T, format="csr")


def bias_coefficients(N: int, E_bias: float) -> np.ndarray:
    """Diagonal of the periodic bias superoperator, in flat order."""
    x = np.arange(N)
    sep = x[:, None] - x[None, :]
    return (1j * E_bias * N / (2 * np.pi) * np.sin(2 * np.pi * sep / N)).ravel()


def build_bias_term(N: int, E_bias: float) -> sp.dia_matrix:
    return sp.diags(bias_coefficients(N, E_bias))


def lindbladian_sparse(real: DisorderRealization, params: ModelParams, include_bias: bool = True) -> sp.csr_matrix:
    """Sparse N^2 x N^2 generator; ``E_bias = T_bath * f_bias`` of the realization."""
    N = real.N
    H = sp.csr_matrix(build_hamiltonian(real, params.c))
    L = -1j * (_left(H, N) - _right(H, N))

    w_plus, w_minus = transition_rates(real)
    idx = np.arange(N)
    nxt = (idx + 1) % N
    # forward jump |x+1><x| at rate w+_x, backward |x><x+1| at rate w-_x
    gain_rows = np.concatenate([nxt * N + nxt, idx * N + idx])
    gain_cols = np.concatenate([idx * N + idx, nxt * N + nxt])
    gain = sp.csr_matrix((np.concatenate([w_plus, w_minus]), (gain_rows, gain_cols)), shape=(N * N, N * N))
    Gamma = sp.diags(w_plus + np.roll(w_minus, 1))
    L = L + gain - 0.5 * (_left(Gamma, N) + _right(Gamma, N))

    if params.gamma:
        diag_mask = np.zeros(N * N)
        diag_mask[idx * N + idx] = 1.0
        L = L + params.gamma * sp.diags(diag_mask - 1.0)

    if include_bias:
        L = L + build_bias_term(N, params.T_bath * real.f_bias)
    return sp.csr_matrix(L)


def build_lindbladian(real: DisorderRealization, params: ModelParams, include_bias: bool = True) -> np.ndarray:
    """Dense superoperator; guarded to N <= 96."""
    if real.N > MAX_DENSE_N:
        raise MemoryGuardError(f"dense Lindbladian limited to N <= {MAX_DENSE_N}, got {real.N}")
    return lindbladian_sparse(real, params, include_bias).toarray()


def hermitian_basis(N: int) -> sp.csr_matrix:
    """Unitary map from real coordinates to flat rho.

    Columns: E_nn, (E_nm + E_mn)/sqrt2 and i(E_nm - E_mn)/sqrt2 for n < m.
    Since R L R = conj(L), the generator is real in this basis.
    """
    rows, cols, vals = [], [], []
    k = 0
    s = 1 / np.sqrt(2)
    for n in range(N):
        rows.append(n * N + n); cols.append(k); vals.append(1.0)
        k += 1
    for n in range(N):
        for m in range(n + 1, N):
            rows += [n * N + m, m * N + n]; cols += [k, k]; vals += [s, s]
            k += 1
            rows += [n * N + m, m * N + n]; cols += [k, k]; vals += [1j * s, -1j * s]
            k += 1
    return sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(N * N, N * N))


def real_lindbladian(real: DisorderRealization, params: ModelParams, include_bias: bool = True):
    """Return ``(L_real, basis)`` with ``L = basis @ L_real @ basis^H``."""
    if real.N > MAX_DENSE_N:
        raise MemoryGuardError(f"dense Lindbladian limited to N <= {MAX_DENSE_N}, got {real.N}")
    T = hermitian_basis(real.N)
    L = lindbladian_sparse(real, params, include_bias)
    Lr = (T.conj().T @ L @ T).toarray()
    if np.abs(Lr.imag).max(initial=0.0) > 1e-10 * max(1.0, np.abs(Lr).max()):
        raise RuntimeError("generator is not real in the Hermitian basis")
    return np.ascontiguousarray(Lr.real), T


def clean_rates(params: ModelParams) -> tuple[float, float]:
    w_plus = params.nu * np.exp(params.f_bias / 2)
    w_minus = params.nu * np.exp(-params.f_bias / 2)
    return float(w_plus), float(w_minus)


def clean_decoherence_spectrum(params: ModelParams, modified: bool = False) -> np.ndarray:
    """Decay rates of the r != 0 branches at c = 0, each N-fold degenerate.

    ``r`` runs over the N - 1 nonzero separations on the ring, taken in
    (-N/2, N/2].  With ``modified`` the bias enters through the periodic
    sine form used by the full generator instead of linearly in ``r``.
    """
    if params.c != 0:
        raise ConfigError("clean decoherence formula needs c = 0")
    N = params.N
    w_plus, w_minus = clean_rates(params)
    E = params.T_bath * params.f_bias
    r = np.array([k if k <= N // 2 else k - N for k in range(1, N)])
    shift = E * N / (2 * np.pi) * np.sin(2 * np.pi * r / N) if modified else E * r
    lam = params.gamma + w_plus + w_minus - 1j * shift
    return np.repeat(lam, N)


def gamma_q(q, params: ModelParams):
    w_plus, w_minus = clean_rates(params)
    return params.gamma + w_plus * np.exp(-1j * q) + w_minus * np.exp(1j * q)


def analytic_relaxation_branch(q, params: ModelParams):
    """Clean-ring relaxation decay rate with coherent hopping, bias energy neglected.

    The square-root sign follows the c = 0 limit ``gamma_0 - gamma_q``, which
    keeps the branch continuous in c away from the branch point.
    """
    q = np.asarray(q, dtype=float)
    w_plus, w_minus = clean_rates(params)
    g0 = params.gamma + w_plus + w_minus
    gq = gamma_q(q, params)
    root = np.sqrt(gq**2 - 4 * params.c**2 * np.sin(q / 2) ** 2 + 0j)
    root = np.where(np.abs(root - gq) <= np.abs(root + gq), root, -root)
    out = g0 - root
    return out if out.ndim else complex(out)


def q_block(q: float, params: ModelParams, r_cutoff: int = 1, E: float | None = None) -> np.ndarray:
    """Generator block at wavenumber ``q`` on the transverse range |r| <= r_cutoff.

    Ordered r = -r_cutoff..r_cutoff; the ``r = 0`` entry carries -gamma_0 + gamma_q.
    ``E`` defaults to the bias energy ``T_bath * f_bias``.
    """
    if E is None:
        E = params.T_bath * params.f_bias
    w_plus, w_minus = clean_rates(params)
    g0 = params.gamma + w_plus + w_minus
    r = np.arange(-r_cutoff, r_cutoff + 1)
    M = np.diag(-g0 - 1j * E * r).astype(complex)
    M[r_cutoff, r_cutoff] += gamma_q(q, params)
    hop = params.c * np.sin(q / 2)
    k = np.arange(2 * r_cutoff)
    M[k, k + 1] = hop
    M[k + 1, k] = -hop
    return M


def default_gamma_x(real: DisorderRealization, params: ModelParams) -> np.ndarray:
    """Per-bond decay scale -(gamma + w+_x + w-_x)."""
    w_plus, w_minus = transition_rates(real)
    return -(params.gamma + w_plus + w_minus)


def effective_rates(real: DisorderRealization, params: ModelParams, lam: complex = 0.0, gamma_x=None) -> np.ndarray:
    """Bond rates dressed by coherent hopping after eliminating r = +-1 elements."""
    if gamma_x is None:
        gamma_x = default_gamma_x(real, params)
    a = lam - np.asarray(gamma_x)
    denom = a**2 + real.E_x**2
    if np.any(np.abs(denom) < 1e-12):
        raise ZeroDivisionError("effective rate pole: (lam - gamma_x)^2 + E_x^2 vanishes")
    return real.nu_x + (params.c**2 / 2) * a / denom


def effective_sigma_nu(params: ModelParams, realization: DisorderRealization | None = None) -> float:
    """Effective resistor-network disorder induced by hopping.

    Without a realization this is the order-of-magnitude scaling
    c^2 T^2 sigma_f^2 / nu^3.  With one, it is the Box-equivalent full width
    sqrt(12) * std of Re(nu_eff) at lam = 0.
    """
    if realization is None:
        return params.c**2 / params.nu**3 * params.T_bath**2 * params.sigma_f**2
    nu_eff = effective_rates(realization, params).real
    return float(np.sqrt(12.0) * np.std(nu_eff))


def clip_sigma_nu(sigma_nu: float, nu: float = 1.0, margin: float = 0.99) -> float:
    """Keep a surrogate width below 2 nu so every bond rate stays positive."""
    return min(sigma_nu, 2.0 * nu * margin)


def surrogate_realization(real: DisorderRealization, params: ModelParams, lam: complex = 0.0) -> DisorderRealization:
    """Classical realization with bond rates replaced by Re(nu_eff)."""
    nu_eff = effective_rates(real, params, lam).real
    if np.any(nu_eff <= 0):
        raise ConfigError("effective rates turned non-positive")
    return DisorderRealization(nu_eff, real.f_x, real.U, real.E_x, real.f_bias)
