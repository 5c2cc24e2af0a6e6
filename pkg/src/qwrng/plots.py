"""Figure rendering for the command-line report paths.

Each function draws one figure and writes it to a file. The Agg backend is
forced so rendering works headless; nothing here opens a window.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from os import PathLike

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np
from numpy.typing import NDArray

from .rate import CurvePoint

PathArg = str | PathLike[str]


def plot_gamma_scan(series: NDArray[np.float64], t_star: int, path: PathArg) -> None:
    """Draw the peak-probability series over walk time and mark its minimum.

    Args:
        series: series[i] is the peak position probability after i+1 steps.
        t_star: step count achieving the minimum (1-based, as in gamma_scan).
        path: output image file.
    """
    series = np.asarray(series, dtype=np.float64)
    steps = np.arange(1, series.size + 1)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(steps, series, lw=1.0, color="tab:blue")
    g_star = float(series[t_star - 1])
    ax.plot([t_star], [g_star], "o", ms=6, color="tab:red", zorder=3)
    ax.annotate(
        f"min {g_star:.4g} at T={t_star}",
        xy=(t_star, g_star),
        xytext=(0.55, 0.85),
        textcoords="axes fraction",
        arrowprops={"arrowstyle": "->", "lw": 0.8},
    )
    ax.set_xlabel("walk steps T")
    ax.set_ylabel("peak position probability")
    ax.set_ylim(bottom=0.0)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_rate_curves(
    curves: Mapping[int, Sequence[CurvePoint]],
    Q: float,
    epsilon: float,
    path: PathArg,
) -> None:
    """Draw key rate against signal count, one line per position dimension.

    Args:
        curves: {P: curve points} as produced by rate_curve.
        Q: noise level, echoed in the title.
        epsilon: security parameter, echoed in the title.
        path: output image file.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for P in sorted(curves, reverse=True):
        points = curves[P]
        ax.plot(
            [pt.N for pt in points],
            [pt.rate for pt in points],
            marker="o",
            ms=3,
            label=f"P={P}",
        )
    ax.set_xscale("log")
    ax.set_xlabel("signals N")
    ax.set_ylabel("key rate (bits per signal)")
    ax.set_title(f"Q={Q:g}, epsilon={epsilon:g}")
    ax.set_ylim(bottom=0.0)
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_position_histogram(
    counts: NDArray[np.int64],
    predicted: NDArray[np.float64],
    path: PathArg,
) -> None:
    """Draw observed position frequencies against the model's distribution.

    Args:
        counts: per-position outcome counts from a protocol run.
        predicted: model position distribution (sums to 1).
        path: output image file.
    """
    counts = np.asarray(counts, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.float64)
    total = counts.sum()
    observed = counts / total if total > 0 else counts.astype(np.float64)
    positions = np.arange(counts.size)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.bar(positions, observed, width=0.9, alpha=0.6, label="observed")
    ax.step(
        np.append(positions, positions.size) - 0.5,
        np.append(predicted, predicted[-1]),
        where="post",
        color="tab:red",
        lw=1.2,
        label="model",
    )
    ax.set_xlabel("position")
    ax.set_ylabel("frequency")
    ax.grid(alpha=0.3, axis="y")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
