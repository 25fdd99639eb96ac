"""Benchmark summary figures rendered to files next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bench import BenchmarkResults

_FIGSIZE = (7.0, 3.2)
_BAR_COLOR = "#4878cf"
_MEAN_STYLE = dict(color="#d65f5f", linestyle="--", linewidth=1.2)


def _finite(values):
    arr = np.asarray(values, dtype=float)
    return arr, np.isfinite(arr)


def render_benchmark_figures(results: BenchmarkResults, outdir) -> list[Path]:
    """Render per-map success rate, duration, and path-length charts as PNG.

    The dashed line marks the mean over maps (finite values only). Returns
    the written paths.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    aggs = sorted(results.aggregates, key=lambda a: a.map_label)
    labels = [a.map_label for a in aggs]
    written = []

    def bar_chart(values, errors, ylabel, filename, ylim=None):
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        x = np.arange(len(labels))
        vals, ok = _finite(values)
        ax.bar(x[ok], vals[ok], color=_BAR_COLOR, width=0.65)
        if errors is not None:
            errs, _ = _finite(errors)
            ax.errorbar(x[ok], vals[ok], yerr=errs[ok], fmt="none", ecolor="0.3", capsize=3)
        if ok.any():
            ax.axhline(vals[ok].mean(), **_MEAN_STYLE)
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
        ax.set_ylabel(ylabel)
        if ylim is not None:
            ax.set_ylim(*ylim)
        ax.grid(axis="y", alpha=0.3)
        fig.tight_layout()
        path = outdir / filename
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    bar_chart(
        [a.success_rate for a in aggs], None, "success rate", "success_rate.png", ylim=(0.0, 1.05)
    )
    bar_chart(
        [a.duration_mean for a in aggs],
        [a.duration_std for a in aggs],
        "duration [s]",
        "durations.png",
    )
    bar_chart(
        [a.path_length_mean for a in aggs],
        [a.path_length_std for a in aggs],
        "path length [m]",
        "path_lengths.png",
    )
    return written
