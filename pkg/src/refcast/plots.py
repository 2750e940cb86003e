"""File-based figures: deviation ECDF with uplift markers, calibration chart.

Rendering is headless (Agg) and always goes to a path; nothing opens a
window. Each function writes one PNG and closes its figure so repeated
CLI invocations do not accumulate state.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .biassim import CalibrationRow
from .errors import IoError
from .refclass import DistributionSummary


def _percentile_label(p: float) -> str:
    return f"P{round((1 - p) * 100):d}"


def plot_ecdf(
    summary: DistributionSummary,
    out_path: str | Path,
    uplifts: Sequence[tuple[float, float]] = (),
    title: str = "Deviation distribution",
) -> None:
    """ECDF step plot; each (risk, uplift) pair gets crosshair markers."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [v for v, _ in summary.ecdf_points]
    ys = [c for _, c in summary.ecdf_points]
    ax.step([xs[0]] + xs, [0.0] + ys, where="post", color="#1f77b4", lw=1.8)
    ax.plot(xs, ys, ".", color="#1f77b4", ms=4)
    for p, u in uplifts:
        level = 1.0 - p
        label = _percentile_label(p)
        ax.axhline(level, color="#d62728", lw=0.8, ls="--", alpha=0.6)
        ax.axvline(u, color="#d62728", lw=0.8, ls="--", alpha=0.6)
        ax.annotate(
            f"{label}: {u * 100:+.1f}%",
            xy=(u, level),
            xytext=(6, 6),
            textcoords="offset points",
            fontsize=9,
            color="#d62728",
        )
    ax.set_xlabel("deviation (fraction of forecast)")
    ax.set_ylabel("cumulative fraction of projects")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(f"{title} (n={summary.n})")
    ax.grid(alpha=0.25)
    _save(fig, out_path)


def plot_calibration(
    rows: Sequence[CalibrationRow],
    out_path: str | Path,
    title: str = "Uplift calibration",
) -> None:
    """Empirical exceedance vs. target with the 3-sigma acceptance band."""
    fig, ax = plt.subplots(figsize=(6, 4))
    positions = range(len(rows))
    for x, row in zip(positions, rows):
        ax.errorbar(
            x,
            row.target,
            yerr=row.tolerance,
            fmt="_",
            color="#555555",
            capsize=6,
            lw=1.2,
            zorder=2,
        )
        ax.plot(
            x,
            row.empirical,
            "o",
            color="#2ca02c" if row.within_tolerance else "#d62728",
            ms=8,
            zorder=3,
        )
    ax.set_xticks(list(positions))
    ax.set_xticklabels([_percentile_label(r.p) for r in rows])
    ax.set_xlim(-0.5, len(rows) - 0.5)
    ax.set_xlabel("budget percentile (accepted overrun risk)")
    ax.set_ylabel("exceedance rate")
    ax.set_title(title)
    ax.grid(alpha=0.25, axis="y")
    _save(fig, out_path)


def _save(fig, out_path: str | Path) -> None:
    try:
        fig.savefig(out_path, dpi=150, bbox_inches="tight")
    except OSError as exc:
        raise IoError(f"cannot write {out_path}: {exc}") from exc
    finally:
        plt.close(fig)
