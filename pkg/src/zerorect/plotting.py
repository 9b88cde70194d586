"""Figures for CLI reports. Uses the non-interactive Agg backend."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .matcore import SubmatrixSelection, values  # noqa: E402
from .spectral import ENTROPY_CONSTANT, binary_entropy  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.frameon": False,
}


def _save(fig, directory: str, name: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_entropy_gap(directory: str, ks=(20, 40, 60, 80), points: int = 2001) -> str:
    """Gap ``1 - (1-p)^k + C/2^k - H(p)`` against p for a few k (log scale)."""
    p = np.linspace(0, 1, points)
    h = np.array([binary_entropy(x) for x in p])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for k in ks:
            gap = 1 - (1 - p) ** k + ENTROPY_CONSTANT / 2.0 ** k - h
            ax.semilogy(p, np.maximum(gap, 1e-300), label=f"k={k}")
        ax.set_xlabel("p")
        ax.set_ylabel("gap")
        ax.legend()
        return _save(fig, directory, "entropy_gap.png")


def plot_selection(directory: str, m, selection: SubmatrixSelection, name: str = "selection.png") -> str:
    """Heat map with the selected rows and columns moved to the top-left corner."""
    arr = np.asarray(values(m), dtype=np.float64)
    rows = list(selection.rows) + [i for i in range(arr.shape[0]) if i not in set(selection.rows)]
    cols = list(selection.cols) + [j for j in range(arr.shape[1]) if j not in set(selection.cols)]
    with plt.rc_context({**STYLE, "axes.grid": False}):
        fig, ax = plt.subplots()
        im = ax.imshow(arr[np.ix_(rows, cols)], cmap="viridis", interpolation="nearest")
        h, w = selection.shape
        ax.add_patch(Rectangle((-0.5, -0.5), w, h, fill=False, edgecolor="red", linewidth=1.5))
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("column (reordered)")
        ax.set_ylabel("row (reordered)")
        return _save(fig, directory, name)


def plot_trace(directory: str, steps, name: str = "trace.png") -> str:
    """Average entry and progress value per halving step."""
    ps = [s.p for s in steps]
    fs = [s.f if np.isfinite(s.f) else np.nan for s in steps]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        idx = np.arange(len(steps))
        ax.plot(idx, ps, "o-", label="p")
        ax.set_xlabel("step")
        ax.set_ylabel("average entry")
        ax2 = ax.twinx()
        ax2.plot(idx, fs, "s--", color="C1", label="progress")
        ax2.set_ylabel("progress value")
        ax2.grid(False)
        lines = ax.get_lines() + ax2.get_lines()
        ax.legend(lines, [ln.get_label() for ln in lines])
        return _save(fig, directory, name)


def plot_extraction(directory: str, result, name: str = "extraction.png") -> str:
    """|R| |S| per random-union trial, with bad trials marked."""
    prods = np.array([t.product for t in result.trace])
    bad = np.array([t.bad for t in result.trace])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        idx = np.arange(len(prods))
        ax.bar(idx[~bad], prods[~bad], color="C0", label="good union")
        ax.bar(idx[bad], prods[bad], color="C3", label="bad union")
        ax.set_xlabel("trial")
        ax.set_ylabel("|R| |S|")
        ax.legend()
        return _save(fig, directory, name)


def plot_histogram(directory: str, counts, name: str = "intersections.png") -> str:
    """Bar chart of intersection sizes."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.bar(np.arange(len(counts)), counts, color="C2")
        ax.set_xlabel("|A & B|")
        ax.set_ylabel("pairs")
        return _save(fig, directory, name)
