"""Figures written next to the evaluation tables."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import METRICS, EvalReport  # noqa: E402

COLOURS = {"full": "#4C72B0", "dict": "#55A868", "list": "#C44E52"}

RC = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "axes.grid.axis": "y",
    "grid.alpha": 0.3,
    "svg.hashsalt": "visrank",
}


def plot_accuracy(reports: EvalReport | Sequence[EvalReport], path: str | Path) -> Path:
    """Grouped bar chart of full/dict/list accuracy per scheme, one panel per k.

    Missing cells (empty subsets) are left blank. Output format follows the
    file suffix; PNG metadata is stripped so reruns are byte-identical.
    """
    if isinstance(reports, EvalReport):
        reports = [reports]
    path = Path(path)
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, len(reports), figsize=(4.2 * len(reports), 3.4),
                                 sharey=True, squeeze=False)
        width = 0.8 / len(METRICS)
        for ax, rep in zip(axes[0], reports):
            labels = [row.label for row in rep.rows]
            for m_i, metric in enumerate(METRICS):
                xs, ys = [], []
                for r_i, row in enumerate(rep.rows):
                    v = row.accuracy(metric)
                    if v is not None:
                        xs.append(r_i + (m_i - 1) * width)
                        ys.append(v)
                ax.bar(xs, ys, width, label=metric, color=COLOURS[metric])
            ax.set_xticks(range(len(labels)))
            ax.set_xticklabels(labels, rotation=30, ha="right")
            ax.set_title(f"k = {rep.k}")
            ax.set_ylim(0, 100)
        axes[0][0].set_ylabel("top-1 accuracy (%)")
        handles, names = axes[0][0].get_legend_handles_labels()
        fig.legend(handles, names, loc="upper center", frameon=False, ncol=len(METRICS))
        fig.tight_layout(rect=(0, 0, 1, 0.92))
        metadata = {"Software": None} if path.suffix.lower() == ".png" else None
        fig.savefig(path, dpi=120, metadata=metadata)
        plt.close(fig)
    return path
