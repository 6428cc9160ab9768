"""PNG figures for reports (Agg backend, no timestamps in the files)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_sweep", "plot_field", "plot_trials"]

_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def plot_sweep(rows: list[dict], path, title: str = "") -> Path:
    """``lhs`` and ``rhs`` against ``t`` on log axes; infinite or zero values are skipped."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for key, style in (("lhs", "o-"), ("rhs", "s--")):
        pts = [(r["t"], r[key]) for r in rows
               if isinstance(r.get(key), float) and math.isfinite(r[key]) and r[key] > 0]
        if pts:
            t, y = zip(*pts)
            ax.plot(t, y, style, label=key, ms=4)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.legend(loc="best")
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_field(values: np.ndarray, path, title: str = "") -> Path:
    """Line plot for 1D grids, image for 2D, middle slice for 3D."""
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    if values.ndim == 1:
        ax.step(np.arange(len(values)), values, where="post")
        ax.set_xlabel("cell")
    else:
        img = values if values.ndim == 2 else values[..., values.shape[-1] // 2]
        # first index runs along x
        im = ax.imshow(img.T, origin="lower", interpolation="nearest", cmap="viridis")
        fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_trials(ratios: list[float], path, title: str = "") -> Path:
    """Per-trial ratio with the running best."""
    r = np.asarray(ratios, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(np.arange(len(r)), r, ".", label="trial")
    if len(r):
        ax.plot(np.arange(len(r)), np.maximum.accumulate(r), "-", label="best so far")
    ax.set_xlabel("trial")
    ax.set_ylabel("ratio")
    ax.legend(loc="best")
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
