"""Eigendecomposition and per-mode diagnostics.

All reported eigenvalues are decay rates ``lam = -eig`` so physical spectra
sit in Re(lam) >= 0.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConvergenceFailure, NonParabolic, PairingAnomaly

CSV_COLUMNS = ("re_lambda", "im_lambda", "Q", "IPR", "branch", "pair_id")


class Branch(str, Enum):
    RELAXATION = "Relaxation"
    DECOHERENCE = "Decoherence"
    UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class ModeRecord:
    Q: float
    IPR: float
    branch: Branch = Branch.RELAXATION
    pair_id: int | None = None


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    modes: tuple[ModeRecord, ...] = field(default=())

    def relaxation(self) -> np.ndarray:
        mask = np.array([m.branch is Branch.RELAXATION for m in self.modes], dtype=bool)
        return self.eigenvalues[mask]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for lam, m in zip(self.eigenvalues, self.modes):
            writer.writerow([
                repr(float(lam.real)), repr(float(lam.imag)), repr(m.Q), repr(m.IPR),
                m.branch.value, "" if m.pair_id is None else m.pair_id,
            ])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def read_spectrum_csv(path: str | Path) -> SpectrumReport:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0].keys()) != CSV_COLUMNS:
        raise ValueError(f"unexpected spectrum columns {tuple(rows[0].keys())}")
    eig = np.array([complex(float(r["re_lambda"]), float(r["im_lambda"])) for r in rows])
    modes = tuple(
        ModeRecord(float(r["Q"]), float(r["IPR"]), Branch(r["branch"]), int(r["pair_id"]) if r["pair_id"] else None)
        for r in rows
    )
    return SpectrumReport(eig, modes)


def _order(values: np.ndarray) -> np.ndarray:
    return np.lexsort((values.imag, values.real))


def eigendecompose(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and unit right eigenvectors, sorted by (Re, Im)."""
    A = np.asarray(matrix)
    if not np.all(np.isfinite(A)):
        raise ConvergenceFailure("matrix has non-finite entries")
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    order = _order(vals)
    vals, vecs = vals[order], vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    scale = max(np.linalg.norm(A, 2) if A.shape[0] <= 256 else np.linalg.norm(A, "fro"), np.finfo(float).tiny)
    resid = np.linalg.norm(A @ vecs - vecs * vals, axis=0)
    if resid.size and resid.max() > 1e-9 * scale:
        raise ConvergenceFailure(f"eigen-residual {resid.max():.3e} exceeds 1e-9 * ||A||")
    return vals, vecs


def eigenvalues(matrix) -> np.ndarray:
    """Eigenvalues only, sorted by (Re, Im)."""
    try:
        vals = np.linalg.eigvals(np.asarray(matrix))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return vals[_order(vals)]


def mode_metrics(mode_vector, N: int) -> tuple[float, float, float]:
    """Return ``(Q, IPR, trace_abs)`` for a mode stored as a flat N^2 vector.

    The mode is first scaled to unit 2-norm.  ``Q`` is the diagonal share of
    that norm, sum_x |rho_xx|^2, which is 1 for a purely diagonal mode and 0
    for a pure coherence.  ``trace_abs`` is |sum_x rho_xx|, which vanishes for
    every mode but the stationary one because the generator preserves trace.
    """
    v = np.asarray(mode_vector, dtype=complex).ravel()
    if v.size != N * N:
        raise ValueError(f"expected a vector of length {N * N}, got {v.size}")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("zero vector has no mode metrics")
    rho = (v / norm).reshape(N, N)
    d = np.diagonal(rho)
    return float(np.sum(np.abs(d) ** 2)), float(np.sum(np.abs(rho) ** 4)), float(abs(d.sum()))


def default_tol_im(values) -> float:
    values = np.asarray(values)
    return 1e-8 * float(np.abs(values).max(initial=0.0))


def pair_ids(values, tol_im: float | None = None) -> list[int | None]:
    """Match each Im>tol eigenvalue with its nearest conjugate partner."""
    values = np.asarray(values)
    if tol_im is None:
        tol_im = default_tol_im(values)
    upper = np.flatnonzero(values.imag > tol_im)
    lower = np.flatnonzero(values.imag < -tol_im)
    ids: list[int | None] = [None] * len(values)
    if len(upper) != len(lower):
        raise PairingAnomaly(f"{len(upper)} eigenvalues above the real axis but {len(lower)} below")
    if len(upper) == 0:
        return ids
    cost = np.abs(values[upper][:, None] - np.conj(values[lower])[None, :])
    rows, cols = linear_sum_assignment(cost)
    scale = max(float(np.abs(values).max()), 1.0)
    for k, (i, j) in enumerate(zip(rows, cols)):
        if cost[i, j] > 1e-6 * scale:
            raise PairingAnomaly(f"no conjugate partner for {values[upper[i]]}")
        ids[upper[i]] = k
        ids[lower[j]] = k
    return ids


def count_complex(values, tol_im: float | None = None, labels=None, scope: str = "all") -> int:
    """Number of eigenvalues with |Im| > tol_im; must be even.

    ``scope="relaxation"`` restricts the count to modes labelled Relaxation.
    """
    values = np.asarray(values)
    if tol_im is None:
        tol_im = default_tol_im(values)
    if scope.lower() in ("relaxation", "relaxationonly", "relaxation_only"):
        if labels is None:
            raise ValueError("relaxation scope needs branch labels")
        values = values[np.array([Branch(b) is Branch.RELAXATION for b in labels], dtype=bool)]
    elif scope.lower() != "all":
        raise ValueError(f"unknown scope {scope!r}")
    n = int(np.sum(np.abs(values.imag) > tol_im))
    if n % 2:
        raise PairingAnomaly(f"odd number ({n}) of complex eigenvalues at tol_im={tol_im:.3e}")
    return n


def classify_branch(qs, N: int, values=None, gap: float = 0.1) -> list[Branch]:
    """Label the N modes of largest diagonal weight Q as Relaxation.

    When the Q values at rank N and N+1 differ by less than ``gap`` times the
    rank-N value, every mode within that window of the rank-N value is
    labelled Unresolved.  With ``values`` given, conjugate partners are kept
    together: a pair split by the rank-N cut is labelled Unresolved.
    """
    qs = np.asarray(qs, dtype=float)
    order = np.argsort(-qs, kind="stable")
    labels = [Branch.DECOHERENCE] * len(qs)
    for k in order[:N]:
        labels[k] = Branch.RELAXATION
    if len(qs) > N:
        q_n, q_next = qs[order[N - 1]], qs[order[N]]
        if q_n - q_next < gap * q_n:
            for k in np.flatnonzero(np.abs(qs - q_n) < gap * q_n):
                labels[k] = Branch.UNRESOLVED
    if values is not None:
        values = np.asarray(values)
        scale = max(float(np.abs(values).max()), 1.0)
        tol = default_tol_im(values)
        for k in np.flatnonzero(np.abs(values.imag) > tol):
            partner = int(np.argmin(np.abs(values - np.conj(values[k]))))
            if abs(values[partner] - np.conj(values[k])) > 1e-6 * scale:
                continue
            if labels[partner] is not labels[k]:
                labels[k] = labels[partner] = Branch.UNRESOLVED
    return labels


def lindblad_report(values, vectors, N: int) -> SpectrumReport:
    """Decay rates and eigenvectors of a generator -> labelled report.

    ``values`` are generator eigenvalues (not yet negated); ``vectors`` hold
    flat rho columns.
    """
    lam = -np.asarray(values)
    metrics = [mode_metrics(vectors[:, k], N) for k in range(vectors.shape[1])]
    qs = [m[0] for m in metrics]
    labels = classify_branch(qs, N, lam)
    ids = pair_ids(lam)
    modes = tuple(ModeRecord(q, ipr, b, i) for (q, ipr, _), b, i in zip(metrics, labels, ids))
    order = _order(lam)
    return SpectrumReport(lam[order], tuple(modes[k] for k in order))


def stochastic_report(values, vectors) -> SpectrumReport:
    """Report for a classical rate matrix; each mode is a diagonal rho."""
    lam = -np.asarray(values)
    N = vectors.shape[0]
    modes = []
    ids = pair_ids(lam)
    for k in range(vectors.shape[1]):
        p = vectors[:, k] / np.linalg.norm(vectors[:, k])
        modes.append(ModeRecord(1.0, float(np.sum(np.abs(p) ** 4)), Branch.RELAXATION, ids[k]))
    order = _order(lam)
    return SpectrumReport(lam[order], tuple(modes[k] for k in order))


def dominant_wavenumber(vector, N: int) -> float:
    """Wavenumber in (-pi, pi] of the strongest Fourier component.

    Accepts a length-N site vector or a flat N^2 rho (its diagonal is used).
    """
    v = np.asarray(vector).ravel()
    if v.size == N * N:
        v = v.reshape(N, N).diagonal()
    k = int(np.argmax(np.abs(np.fft.fft(v))))
    q = 2 * np.pi * k / N
    return q - 2 * np.pi if q > np.pi else q


def transport_fit(values, qs, N: int, q_max: float | None = None, min_modes: int = 5) -> tuple[float, float]:
    """Fit lam(q) ~ i v q + D q^2 over the smallest |q|.

    Fourth- and third-order corrections are fitted alongside so that the
    returned coefficients are the small-q limits.
    """
    lam = np.asarray(values)
    qs = np.asarray(qs, dtype=float)
    if q_max is None:
        q_max = 8 * np.pi / N * (1 + 1e-9)
    sel = np.abs(qs) <= q_max
    if sel.sum() < min_modes:
        raise ValueError(f"need at least {min_modes} modes with |q| <= {q_max}")
    q, y = qs[sel], lam[sel]
    A_re = np.column_stack([q**2, q**4])
    A_im = np.column_stack([q, q**3])
    (D, d4), *_ = np.linalg.lstsq(A_re, y.real, rcond=None)
    (v, v3), *_ = np.linalg.lstsq(A_im, y.imag, rcond=None)
    fit = A_re @ [D, d4] + 1j * (A_im @ [v, v3])
    scale = np.abs(y).max()
    if scale > 0 and np.abs(fit - y).max() > 0.05 * scale:
        raise NonParabolic("small-q dispersion deviates from the low-order fit by more than 5%")
    return float(v), float(D)


def stochastic_spectrum(W) -> SpectrumReport:
    vals, vecs = eigendecompose(W)
    return stochastic_report(vals, vecs)


def lindblad_spectrum(real, params, include_bias: bool = True) -> SpectrumReport:
    """Full labelled spectrum of the dense Lindbladian.

    The generator is diagonalized in the Hermitian basis where it is real;
    eigenvectors are mapped back to flat rho before computing Q and IPR.
    """
    from .lindblad import real_lindbladian

    Lr, T = real_lindbladian(real, params, include_bias)
    vals, vecs = eigendecompose(Lr)
    rho = np.asarray(T @ vecs)
    return lindblad_report(vals, rho, real.N)
