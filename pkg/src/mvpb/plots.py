"""Deterministic SVG figures (matplotlib, Agg backend)."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("line", "loglog", "heatmap")


class EmptySeriesError(ValueError):
    pass


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""


@dataclass
class Guide:
    """Reference line y = amplitude * x**slope (loglog) or y = slope * x (line/heatmap)."""
    slope: float
    amplitude: float = 1.0
    label: str = ""


@dataclass
class Figure:
    kind: str
    series: list = field(default_factory=list)
    guides: list = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    # heatmap payload: z[i, j] at (y[i], x[j])
    z: np.ndarray | None = None
    zlabel: str = ""


def emit_plot(fig: Figure, path) -> Path:
    """Write a self-contained SVG; identical input gives identical bytes."""
    if fig.kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if fig.kind == "heatmap":
        if fig.z is None or np.size(fig.z) == 0 or not fig.series:
            raise EmptySeriesError("heatmap needs a non-empty z array and its axes")
    elif not fig.series or any(np.size(s.x) == 0 for s in fig.series):
        raise EmptySeriesError("cannot plot an empty series")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "mvpb", "svg.fonttype": "path"}):
        f, ax = plt.subplots(figsize=(6, 4.2))
        if fig.kind == "heatmap":
            axes = fig.series[0]
            im = ax.pcolormesh(axes.x, axes.y, fig.z, shading="auto", cmap="viridis",
                               rasterized=False)
            f.colorbar(im, ax=ax, label=fig.zlabel)
            for g in fig.guides:
                ax.plot(g.slope * np.asarray(axes.y), axes.y, "w--", lw=1, label=g.label)
            ax.set_xlim(np.min(axes.x), np.max(axes.x))
            ax.set_ylim(np.min(axes.y), np.max(axes.y))
        else:
            for s in fig.series:
                ax.plot(s.x, s.y, "o-", ms=3, label=s.label)
            xs = np.concatenate([np.asarray(s.x, float) for s in fig.series])
            for g in fig.guides:
                xx = np.linspace(xs.min(), xs.max(), 50)
                if fig.kind == "loglog":
                    xx = np.geomspace(max(xs.min(), 1e-300), xs.max(), 50)
                    ax.plot(xx, g.amplitude * xx ** g.slope, "k--", lw=1, label=g.label)
                else:
                    ax.plot(xx, g.amplitude * g.slope * xx, "k--", lw=1, label=g.label)
            if fig.kind == "loglog":
                ax.set_xscale("log")
                ax.set_yscale("log")
        ax.set_xlabel(fig.xlabel)
        ax.set_ylabel(fig.ylabel)
        if fig.title:
            ax.set_title(fig.title)
        if any(s.label for s in fig.series) or any(g.label for g in fig.guides):
            ax.legend(fontsize=8)
        f.tight_layout()
        f.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(f)
    return path
