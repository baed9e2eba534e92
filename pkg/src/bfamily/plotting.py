"""Static figures written to files (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 5.0

params = {
    "axes.labelsize": 10,
    "font.size": 9,
    "font.family": "serif",
    "mathtext.fontset": "stix",
    "legend.fontsize": 8,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 150,
    "lines.linewidth": 1.0,
    "lines.markersize": 3,
    "svg.hashsalt": "bfamily",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)
    return path


def plot_contour(path, extent, values, title: str = "") -> Path:
    """Space-time filled contours of ``u`` (rows = t, cols = x)."""
    t0, t1, x0, x1 = extent
    rows, cols = values.shape
    with matplotlib.rc_context(params):
        fig, ax = plt.subplots()
        T, X = np.meshgrid(np.linspace(t0, t1, rows), np.linspace(x0, x1, cols), indexing="ij")
        cs = ax.contourf(X, T, values, levels=30, cmap="viridis")
        fig.colorbar(cs, ax=ax, label="$u$")
        ax.set_xlabel("$x$")
        ax.set_ylabel("$t$")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_profiles(path, x, profiles, labels=None, title: str = "") -> Path:
    with matplotlib.rc_context(params):
        fig, ax = plt.subplots()
        for i, u in enumerate(profiles):
            ax.plot(x, u, label=None if labels is None else labels[i])
        ax.set_xlabel("$x$")
        ax.set_ylabel("$u$")
        if labels is not None:
            ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_spectrum(path, eigenvalues, title: str = "") -> Path:
    ev = np.asarray(eigenvalues)
    with matplotlib.rc_context(params):
        fig, ax = plt.subplots()
        ax.plot(ev.real, ev.imag, ".", ms=2)
        ax.axvline(0.0, color="0.6", lw=0.5)
        ax.set_xlabel(r"$\mathrm{Re}\,\lambda$")
        ax.set_ylabel(r"$\mathrm{Im}\,\lambda$")
        ax.ticklabel_format(axis="x", style="sci", scilimits=(-3, 3))
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_branch(path, params_, values, xlabel: str, ylabel: str, title: str = "") -> Path:
    with matplotlib.rc_context(params):
        fig, ax = plt.subplots()
        ax.plot(params_, values, "o-", ms=2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_band_scan(path, lam, member, bound=None, title: str = "") -> Path:
    lam = np.asarray(lam)
    member = np.asarray(member, dtype=bool)
    with matplotlib.rc_context(params):
        fig, ax = plt.subplots()
        ax.plot(lam.real[member], lam.imag[member], "o", label="in band")
        ax.plot(lam.real[~member], lam.imag[~member], "x", label="outside")
        if bound is not None:
            for s in (-1, 1):
                ax.axvline(s * bound, color="0.5", ls="--", lw=0.7)
        ax.set_xlabel(r"$\mathrm{Re}\,\lambda$")
        ax.set_ylabel(r"$\mathrm{Im}\,\lambda$")
        ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, path)
