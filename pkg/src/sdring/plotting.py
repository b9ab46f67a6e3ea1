"""Static figures for spectra, sweep maps and threshold histograms.

Everything renders off-screen to image files; nothing here is needed for
the numerical results.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .ensemble import SweepResult, ThresholdStats  # noqa: E402
from .spectral import Branch, SpectrumReport  # noqa: E402

BRANCH_STYLE = {
    Branch.RELAXATION: dict(color="tab:blue", marker="o", s=14),
    Branch.DECOHERENCE: dict(color="tab:gray", marker=".", s=6),
    Branch.UNRESOLVED: dict(color="tab:red", marker="x", s=14),
}

# metadata=None would stamp the matplotlib version; an explicit dict keeps files stable
_PNG_META = {"Software": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_spectrum(report: SpectrumReport, path: str | Path, title: str | None = None) -> Path:
    """Scatter of decay rates in the complex plane, coloured by branch."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    lam = report.eigenvalues
    for branch, style in BRANCH_STYLE.items():
        sel = np.array([m.branch is branch for m in report.modes], dtype=bool)
        if sel.any():
            ax.scatter(lam[sel].real, lam[sel].imag, label=branch.value, **style)
    ax.set_xlabel(r"Re $\lambda$")
    ax.set_ylabel(r"Im $\lambda$")
    ax.axhline(0, color="k", lw=0.5)
    ax.legend(frameon=False, fontsize=8)
    if title:
        ax.set_title(title, fontsize=9)
    return _save(fig, path)


def plot_sweep(result: SweepResult, path: str | Path, label: str = "") -> Path:
    """Colour map of the realization-averaged observable over the two axes."""
    (n1, g1), (n2, g2) = result.spec.axis1, result.spec.axis2
    grid = result.mean_grid()
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    mesh = ax.pcolormesh(np.asarray(g1), np.asarray(g2), grid.T, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=label or result.spec.observable.value)
    ax.set_xlabel(n1)
    ax.set_ylabel(n2)
    return _save(fig, path)


def plot_cumulative(stats: Mapping[str, ThresholdStats], path: str | Path, xlabel: str = "threshold") -> Path:
    """Step plot of cumulative threshold histograms, one curve per label."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    for label, s in stats.items():
        ax.step(s.cumulative, s.quantiles(), where="post", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("cumulative fraction")
    ax.set_ylim(0, 1.02)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)
