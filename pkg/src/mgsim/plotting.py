"""Matplotlib figures written next to the CSV outputs.

Nothing else in the package imports this module, so the simulator itself
runs without matplotlib installed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import state_raster_pixels  # noqa: E402
from .physics import CircuitParams  # noqa: E402

STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_state_raster(trace, path, max_rows: int | None = None) -> Path:
    """Agent state over time: red defect, white cooperate, black ignore."""
    S = trace.S[1:]
    if max_rows is not None:
        S = S[:max_rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.imshow(state_raster_pixels(S), aspect="auto", interpolation="nearest")
        ax.set_xlabel("agent")
        ax.set_ylabel("round t")
        ax.grid(False)
        ax.set_title(f"N = {trace.N}")
        return _save(fig, path)


def plot_timeseries(trace, path) -> Path:
    """Load relative to the optimum and normalised delivered power."""
    cp = CircuitParams.from_config(trace.config)
    t = np.arange(len(trace))
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
        ax1.plot(t, trace.n / cp.n_opt, lw=0.6)
        ax1.axhline(1.0, color="k", ls="--", lw=0.8)
        ax1.set_ylabel(r"$n / n_{opt}$")
        ax2.plot(t, trace.P_all / cp.P_typ, lw=0.6, color="tab:red")
        ax2.axhline(0.25, color="k", ls="--", lw=0.8)
        ax2.set_ylabel(r"$P_{all} / P_{typ}$")
        ax2.set_xlabel("round t")
        return _save(fig, path)


def plot_sweep(aggregates: list, path, metric: str = "P_util") -> Path:
    """Aggregate metric against N, one line per (topology, policy) pair."""
    groups: dict = {}
    for row in aggregates:
        groups.setdefault((row["topology"], row["policy"]), []).append(row)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for (topo, pol), rows in sorted(groups.items()):
            rows = sorted(rows, key=lambda r: r["N"])
            N = [r["N"] for r in rows]
            mean = np.array([r[f"{metric}_mean"] for r in rows])
            std = np.array([r[f"{metric}_std"] for r in rows])
            ax.errorbar(N, mean, yerr=std, marker="o", capsize=3, label=f"{pol} {topo}")
        ax.set_xscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel(metric)
        ax.legend()
        return _save(fig, path)
