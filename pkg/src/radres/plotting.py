"""Static figures for sweep results (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.frameon": False,
}


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_g_vs_inverse_h(result, path, fit=None, title=None):
    """``g`` against ``1/h`` with the predicted bound and an optional trapping fit."""
    h, g = result.column("h"), result.column("g")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(1 / h, g, "o-", label="measured g")
        bound = np.array([np.nan if r.bound is None else r.bound for r in result.rows])
        if np.isfinite(bound).any():
            ax.plot(1 / h, bound, "--", color="0.4", label="C h^-k (log 1/h)^q")
        if fit is not None and fit.model == "trapping":
            x = np.linspace((1 / h).min(), (1 / h).max(), 100)
            ax.plot(x, fit.intercept + fit.slope * x, ":", label=f"fit slope {fit.slope:.3g}")
        ax.set_xlabel("1/h")
        ax.set_ylabel("g")
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def plot_loglog(result, path, fit=None, title=None):
    """``log g`` against ``log(1/h)`` for power-law inspection."""
    h, g = result.column("h"), result.column("g")
    keep = g > 0
    x, y = np.log(1 / h[keep]), np.log(g[keep])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(x, y, "o", label="measured")
        if fit is not None and fit.model == "pure-power":
            ax.plot(x, fit.intercept + fit.slope * x, "-", label=f"slope {fit.slope:.3g}")
        ax.set_xlabel("log(1/h)")
        ax.set_ylabel("log g")
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def render_sweep(result, outdir, stem="sweep", fit=None):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [plot_g_vs_inverse_h(result, outdir / f"{stem}_g.png", fit),
            plot_loglog(result, outdir / f"{stem}_loglog.png", fit)]
