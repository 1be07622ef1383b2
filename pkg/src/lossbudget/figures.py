"""Matplotlib rendering of report figures.

The CLI writes these alongside the delimited reports: extraction
ensembles as per-region histograms, worst-case curves versus device
count, per-device loss decompositions as stacked bars, and predicted Q
with its confidence interval.  PNG metadata is stripped of dates so
identical runs produce identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simexp import WorstCaseCurve
from .uncertainty import ExtractionResult, QPrediction

__all__ = [
    "render_extraction",
    "render_worst_case",
    "render_decomposition",
    "render_prediction",
]

_SAVEFIG_KWARGS = {"dpi": 150, "metadata": {"Date": None}}


def _save(fig, path: "str | Path") -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)
    return path


def render_extraction(result: ExtractionResult, path: "str | Path") -> Path:
    """Per-region histograms of the Monte Carlo loss-factor ensemble."""
    ensemble = result.ensemble_array()
    n = len(result.regions)
    ncols = min(n, 2)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 3.0 * nrows))
    for i, region in enumerate(result.regions):
        ax = np.atleast_1d(axes).flat[i]
        ax.hist(ensemble[:, i], bins=60, color="#0173b2", alpha=0.85)
        lo, hi = result.ci95[i]
        ax.axvline(result.mean[i], color="#d55e00", lw=1.2, label="mean")
        ax.axvline(lo, color="#029e73", lw=1.0, ls="--", label="95% CI")
        ax.axvline(hi, color="#029e73", lw=1.0, ls="--")
        ax.set_title(region)
        ax.set_xlabel("loss factor")
        ax.set_ylabel("trials")
        if i == 0:
            ax.legend(fontsize=8)
    for j in range(n, nrows * ncols):
        np.atleast_1d(axes).flat[j].set_visible(False)
    return _save(fig, path)


def render_worst_case(
    curve: WorstCaseCurve,
    path: "str | Path",
    target: "Sequence[float] | None" = None,
) -> Path:
    """Worst-case CI bounds versus number of measured devices."""
    n = len(curve.regions)
    ncols = min(n, 2)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 3.0 * nrows))
    grid = list(curve.n_devices_grid)
    low = np.asarray(curve.worst_low)
    high = np.asarray(curve.worst_high)
    for i, region in enumerate(curve.regions):
        ax = np.atleast_1d(axes).flat[i]
        ax.fill_between(grid, low[:, i], high[:, i], color="#0173b2", alpha=0.30)
        ax.plot(grid, low[:, i], "o-", color="#0173b2", ms=4, label="worst-case bounds")
        ax.plot(grid, high[:, i], "o-", color="#0173b2", ms=4)
        if target is not None:
            ax.axhline(target[i], color="k", ls="--", lw=1.0, label="target")
        ax.set_title(region)
        ax.set_xlabel("devices measured")
        ax.set_ylabel("loss factor")
        if i == 0:
            ax.legend(fontsize=8)
    for j in range(n, nrows * ncols):
        np.atleast_1d(axes).flat[j].set_visible(False)
    return _save(fig, path)


def render_decomposition(
    contributions: Sequence[dict], path: "str | Path"
) -> Path:
    """Stacked per-region inverse-Q bars, one bar per device."""
    devices: list[str] = []
    regions: list[str] = []
    for row in contributions:
        if row["device_id"] not in devices:
            devices.append(row["device_id"])
        if row["region"] not in regions:
            regions.append(row["region"])
    values = np.zeros((len(devices), len(regions)))
    for row in contributions:
        values[devices.index(row["device_id"]), regions.index(row["region"])] = row["inv_q"]

    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(devices) + 2.0), 3.6))
    x = np.arange(len(devices))
    bottom = np.zeros(len(devices))
    palette = ["#d55e00", "#0173b2", "#cc78bc", "#029e73", "#ca9161", "#949494"]
    for j, region in enumerate(regions):
        ax.bar(x, values[:, j], bottom=bottom, label=region,
               color=palette[j % len(palette)], width=0.7)
        bottom += values[:, j]
    ax.set_xticks(x)
    ax.set_xticklabels(devices, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("1/Q contribution")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_prediction(
    prediction: QPrediction,
    path: "str | Path",
    *,
    device_id: str = "",
    measured_q: "float | None" = None,
) -> Path:
    """Predicted Q_TLS with its 95% CI, optionally against the measured value."""
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    lo, hi = prediction.ci95
    ax.errorbar(
        [0.0], [prediction.q_mean],
        yerr=[[prediction.q_mean - lo], [hi - prediction.q_mean]],
        fmt="o", color="#0173b2", capsize=5, label="predicted",
    )
    if measured_q is not None:
        ax.plot([0.0], [measured_q], "s", color="#d55e00", label="measured")
    ax.set_xlim(-1, 1)
    ax.set_xticks([0.0])
    ax.set_xticklabels([device_id or "device"])
    ax.set_ylabel("Q_TLS")
    ax.legend(fontsize=8)
    return _save(fig, path)
