"""Render metric-versus-k curves from an aggregate report to image files."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import METRIC_NAMES, MetricReport

_LABELS = {
    "precision": "Precision",
    "recall": "Recall",
    "f_measure": "F-measure",
    "mrr": "MRR",
    "ndcg": "nDCG",
    "lauc": "lAUC",
}


def render_metric_figures(report: MetricReport, out_dir: str | Path, dpi: int = 150) -> list[Path]:
    """One PNG per metric: cross-fold mean per algorithm with std error bars."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    ks = list(report.k_values)
    for metric in METRIC_NAMES:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for alg in report.algorithms:
            means = [report.mean[(alg, k, metric)] for k in ks]
            stds = [report.std[(alg, k, metric)] for k in ks]
            if all(math.isnan(m) for m in means):
                continue
            ax.errorbar(ks, means, yerr=stds, label=alg, marker="o",
                        markersize=3, capsize=2, linewidth=1.2)
        ax.set_xlabel("k")
        ax.set_ylabel(_LABELS[metric])
        ax.set_xlim(0, max(ks))
        ax.set_ylim(bottom=0)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{metric}.png"
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
        written.append(path)
    return written
