"""Matplotlib renderers for the report tables.

Each function writes one PNG next to the delimited output it illustrates.
The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .aggregate import PeakStudyResult, QuantileProfile
from .core import SegmentedTariff
from .io.results import ProfileTable

__all__ = [
    "save_session_profile",
    "save_quantile_profile",
    "save_peak_study",
]

_FIG_KW = dict(dpi=140, bbox_inches="tight")


def _hours_axis(table: ProfileTable) -> np.ndarray:
    t0 = table.times_utc[0]
    return np.array([(t - t0).total_seconds() / 3600.0 for t in table.times_utc])


def save_session_profile(
    table: ProfileTable,
    path: str | Path,
    tariff: SegmentedTariff | None = None,
    title: str = "",
) -> Path:
    """Step plot of one session's power with cumulative energy overlay."""
    path = Path(path)
    hours = _hours_axis(table)
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    ax.step(hours, table.power_kw, where="post", lw=1.8, color="#1f77b4", label="power")
    if tariff is not None:
        for thr in tariff.cumulative_thresholds_kw[:-1]:
            ax.axhline(thr, color="#999999", lw=0.8, ls=":")
    ax.set_xlabel("hours since first step")
    ax.set_ylabel("power [kW]")
    ax.set_ylim(bottom=0)
    ax.grid(alpha=0.3)

    ax2 = ax.twinx()
    ax2.plot(hours, table.cumulative_energy_kwh, color="#d62728", lw=1.2, label="energy")
    ax2.set_ylabel("cumulative energy [kWh]")
    ax2.set_ylim(bottom=0)

    if title:
        ax.set_title(title)
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, loc="lower right", fontsize=8)
    fig.savefig(path, **_FIG_KW)
    plt.close(fig)
    return path


def save_quantile_profile(qp: QuantileProfile, path: str | Path, title: str = "") -> Path:
    """Hour-of-day quantile bands with the per-hour maximum dashed."""
    path = Path(path)
    hours = np.arange(24)
    fig, ax = plt.subplots(figsize=(8.0, 4.0))

    levels = qp.quantile_levels
    n = len(levels)
    for i in range(n // 2):
        lo = qp.values_kw[:, i]
        hi = qp.values_kw[:, n - 1 - i]
        ax.fill_between(
            hours, lo, hi,
            alpha=0.18 + 0.12 * i, color="#1f77b4", lw=0,
            label=f"q{levels[i]:g}-q{levels[n - 1 - i]:g}",
        )
    if n % 2 == 1:
        ax.plot(hours, qp.values_kw[:, n // 2], color="#1f77b4", lw=1.6,
                label=f"q{levels[n // 2]:g}")
    ax.plot(hours, qp.max_kw, "k--", lw=1.2, label="max")

    ax.set_xlabel("hour of day [UTC]")
    ax.set_ylabel("load per charge point [kW]")
    ax.set_xlim(0, 23)
    ax.set_ylim(bottom=0)
    ax.set_xticks(range(0, 24, 3))
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, ncol=2)
    if title:
        ax.set_title(title)
    fig.savefig(path, **_FIG_KW)
    plt.close(fig)
    return path


def save_peak_study(result: PeakStudyResult, path: str | Path, title: str = "") -> Path:
    """Per-CP annual peak vs. fleet size, with the diversity factor axis."""
    path = Path(path)
    levels = np.asarray(result.levels, dtype=float)
    medians = np.array([result.median_max_per_cp(lvl) for lvl in result.levels])

    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    summary = result.summary()
    qs = result.summary_quantile_levels
    if len(qs) >= 2:
        lo = np.array([summary[lvl][qs[0]] for lvl in result.levels])
        hi = np.array([summary[lvl][qs[-1]] for lvl in result.levels])
        ax.fill_between(levels, lo, hi, alpha=0.2, color="#1f77b4", lw=0,
                        label=f"q{qs[0]:g}-q{qs[-1]:g}")
    ax.plot(levels, medians, "o-", color="#1f77b4", lw=1.6, ms=4, label="median")

    ax.set_xscale("log", base=2)
    ax.set_xticks(levels)
    ax.set_xticklabels([str(lvl) for lvl in result.levels])
    ax.set_xlabel("charge points aggregated")
    ax.set_ylabel("annual peak per charge point [kW]")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)

    cap = result.single_cp_kw
    sec = ax.secondary_yaxis(
        "right", functions=(lambda y: cap / np.maximum(y, 1e-9),
                            lambda d: cap / np.maximum(d, 1e-9))
    )
    sec.set_ylabel("diversity factor")
    if title:
        ax.set_title(title)
    fig.savefig(path, **_FIG_KW)
    plt.close(fig)
    return path
