"""Matplotlib figures written next to the tabular output."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .spanner import SpannerGraph  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.bbox": "tight",
    "svg.hashsalt": "uspanner",  # stable ids so reruns give identical files
}


def plot_spanner(points, g: SpannerGraph, path: str | Path, title: str | None = None) -> None:
    """Scatter of the points with every spanner edge drawn as a segment."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        for e in g.edges:
            ax.plot(points[[e.u, e.v], 0], points[[e.u, e.v], 1], color="0.55", lw=0.5, zorder=1)
        ax.scatter(points[:, 0], points[:, 1], s=8, color="C3", zorder=2)
        ax.set_aspect("equal")
        ax.set_title(title or f"n={g.n}, s={g.s:g}, edges={len(g.edges)}")
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)


def plot_sweep(rows: list[dict], path: str | Path,
               columns=("edges_per_node", "avg_degree", "max_degree_ratio", "weight_ratio",
                        "message_ratio", "store_ratio")) -> None:
    """Normalized ratios against n, one line per ratio."""
    ns = [r["n"] for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 4))
        for i, col in enumerate(columns):
            if all(col in r for r in rows):
                ax.plot(ns, [r[col] for r in rows], marker="o", ms=3, label=col, color=f"C{i}")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("n")
        ax.set_ylabel("ratio")
        ax.legend(frameon=False, fontsize=7)
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
