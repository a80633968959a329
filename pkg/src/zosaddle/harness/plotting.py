"""Static SVG line charts of convergence traces."""
from __future__ import annotations

import csv
import math
import warnings
from collections import defaultdict
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["render_plot", "read_trace_csv", "series_from_traces", "plot_trace_files"]

SERIES_GID = "series"


def render_plot(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], path,
                logy: bool = True, logx: bool = False, xlabel: str = "oracle calls",
                ylabel: str = "eps_sad", title: str | None = None, note: str | None = None) -> Path:
    """Write one line per labeled series to a standalone SVG file.

    Points with NaN (or, on a log axis, non-positive) values are dropped with
    a warning. Each line carries the SVG id ``series-<i>``.
    """
    if not series:
        raise ValueError("nothing to plot")
    path = Path(path)
    with plt.rc_context({"svg.fonttype": "none", "svg.hashsalt": "zosaddle"}):
        fig, ax = plt.subplots(figsize=(8, 5))
        plotted = 0
        for i, (label, (xs, ys)) in enumerate(series.items()):
            xs = np.asarray(xs, dtype=np.float64)
            ys = np.asarray(ys, dtype=np.float64)
            keep = np.isfinite(xs) & np.isfinite(ys)
            if logy:
                keep &= ys > 0
            if logx:
                keep &= xs > 0
            dropped = int(np.count_nonzero(~keep))
            if dropped:
                warnings.warn(f"{label}: dropped {dropped} unplottable value(s)", RuntimeWarning, stacklevel=2)
            if not keep.any():
                continue
            (line,) = ax.plot(xs[keep], ys[keep], label=label, linewidth=1.4)
            line.set_gid(f"{SERIES_GID}-{i}")
            plotted += 1
        if plotted == 0:
            plt.close(fig)
            raise ValueError("no finite points to plot")
        if logy:
            ax.set_yscale("log")
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if note:
            fig.text(0.01, 0.01, note, fontsize=8)
        ax.grid(True, which="major", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def read_trace_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _float(v: str) -> float:
    return float(v) if v not in ("", None) else math.nan


def series_from_traces(rows: Sequence[Mapping[str, str]], metric: str = "eps_sad") -> dict[str, tuple[list, list]]:
    """Group rows by cell and average ``metric`` over trials at each recorded ``k``."""
    grouped: dict[str, dict[int, list[tuple[float, float]]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        grouped[r["cell_id"]][int(r["k"])].append((_float(r["oracle_calls"]), _float(r[metric])))
    out = {}
    for cell in sorted(grouped):
        ks = sorted(grouped[cell])
        xs = [float(np.mean([p[0] for p in grouped[cell][k]])) for k in ks]
        ys = [float(np.mean([p[1] for p in grouped[cell][k]])) for k in ks]
        out[cell] = (xs, ys)
    return out


def plot_trace_files(paths: Sequence, output, metric: str = "eps_sad", logx: bool = False,
                     title: str | None = None, note: str | None = None) -> Path:
    rows: list[dict[str, str]] = []
    for p in paths:
        rows.extend(read_trace_csv(p))
    if not rows:
        raise ValueError("trace files contain no rows")
    return render_plot(series_from_traces(rows, metric), output, logx=logx, ylabel=metric,
                       title=title, note=note)
