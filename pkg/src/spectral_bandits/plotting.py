"""PNG figures written next to the CSV outputs.

Uses the object-oriented matplotlib API with the Agg canvas, so nothing
touches pyplot's global state or needs a display.
"""
from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def _save(fig, path):
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120)


def plot_regret_curves(curves: dict, path, title="Cumulative regret") -> None:
    """One line per policy: mean cumulative regret against ``t``."""
    fig = Figure(figsize=(6, 4), layout="constrained")
    ax = fig.add_subplot()
    for label, curve in curves.items():
        curve = np.asarray(curve)
        ax.plot(np.arange(1, len(curve) + 1), curve, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("mean cumulative regret")
    ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_effdim(rows, path, n_nodes=None) -> None:
    """Effective dimension against the horizon."""
    t, d = np.array(rows).T
    fig = Figure(figsize=(6, 4), layout="constrained")
    ax = fig.add_subplot()
    ax.step(t, d, where="post")
    ax.set_xlabel("T")
    ax.set_ylabel("effective dimension d")
    if n_nodes:
        ax.set_title(f"Effective dimension (N = {n_nodes})")
    ax.grid(alpha=0.3)
    _save(fig, path)
