"""Report figures.

Figures are built on bare :class:`matplotlib.figure.Figure` objects with
the Agg canvas, so no global pyplot state is touched and the PNG bytes
depend only on the data (the ``Software`` metadata stamp is dropped).
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def _new(width: float = 5.0, height: float = 3.2, ncols: int = 1):
    fig = Figure(figsize=(width, height), dpi=100, layout="constrained")
    FigureCanvasAgg(fig)
    axes = fig.subplots(1, ncols)
    return fig, axes


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="png", metadata={"Software": None})
    return path


def recovery_figure(rows, path: str | Path, title: str = "Ground-truth recovery") -> Path:
    """Exact-match rate and MAE per consensus method, side by side."""
    fig, (ax1, ax2) = _new(7.0, 3.0, ncols=2)
    methods = [r.method for r in rows]
    x = np.arange(len(methods))
    ax1.bar(x, [r.exact_match_rate for r in rows], color="#4c72b0")
    ax1.set_ylim(0, 1)
    ax1.set_ylabel("exact match rate")
    ax2.bar(x, [r.mae for r in rows], color="#dd8452")
    ax2.set_ylabel("mean absolute error")
    for ax in (ax1, ax2):
        ax.set_xticks(x, methods, rotation=20, ha="right")
        ax.grid(axis="y", alpha=0.3)
    fig.suptitle(title)
    return _save(fig, path)


def metrics_figure(rows, path: str | Path) -> Path:
    fig, (ax1, ax2) = _new(7.0, 3.0, ncols=2)
    drop = np.array([r.drop for r in rows])
    rel = np.array([r.reliability for r in rows])
    acc = np.array([r.accuracy for r in rows])
    weight = np.array([r.weight for r in rows])
    ax1.scatter(drop, rel, s=8, alpha=0.5, color="#4c72b0")
    ax1.set_yscale("log")
    ax1.set_xlabel("drop of confidence")
    ax1.set_ylabel("reliability")
    ax2.scatter(acc, weight, s=8, alpha=0.5, c=np.log10(rel), cmap="viridis")
    ax2.set_xlabel("accuracy")
    ax2.set_ylabel("weight")
    ax2.set_xlim(-0.02, 1.02)
    ax2.set_ylim(-0.02, 1.02)
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
    fig.suptitle("Worker metrics per (worker, question)")
    return _save(fig, path)


def posterior_figure(inference, path: str | Path) -> Path:
    """Heatmap of one question's posterior table, disclosed scores marked."""
    probs = inference.table.probabilities
    n, k = probs.shape
    fig, ax = _new(1.2 + 0.45 * k, 1.0 + 0.35 * n)
    im = ax.imshow(probs, vmin=0, vmax=1, cmap="Blues", aspect="auto")
    ax.scatter(np.array(inference.table.disclosed) - 1, np.arange(n), marker="x", color="#c44e52", label="disclosed")
    ax.set_xticks(np.arange(k), [str(s) for s in range(1, k + 1)])
    ax.set_yticks(np.arange(n), list(inference.worker_ids))
    ax.set_xlabel("true score")
    ax.set_title(f"P(true opinion | disclosed), {inference.question_id}")
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)


def opinion_recovery_figure(rows: Sequence, path: str | Path) -> Path:
    fig, ax = _new(3.5, 3.0)
    ax.bar([r.method for r in rows], [r.match_rate for r in rows], color=["#55a868", "#8c8c8c"][: len(rows)])
    ax.set_ylim(0, 1)
    ax.set_ylabel("match rate vs hidden true opinion")
    ax.grid(axis="y", alpha=0.3)
    return _save(fig, path)
