"""
SVG figures of distance sweeps, index comparisons and configurations.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .model import Configuration, Interpretation  # noqa: E402

logger = logging.getLogger(__name__)

FIGSIZE = (14, 6)
DPI = 100
KPI_COLUMNS = ("M", "V_raw", "IR", "TI", "MTI", "DS", "MDS", "CN", "MCN", "orientation_dist", "position_dist")


def _legend_label(label: str) -> str:
    try:
        return Interpretation.parse(label).symbol
    except ValueError:
        return label


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.debug("wrote %s", path)
    return path


def _distance_column(rows: pd.DataFrame, signed: bool) -> pd.Series:
    values = rows["distance"].astype(float)
    if signed:
        values = values * rows["sign"].astype(float).fillna(1.0)
    return values


def plot_interpretation(frame: pd.DataFrame, interpretation: str, path: Path, signed: bool = False) -> Path:
    """
    Distance against pose for one interpretation: every branch and the overall curve.

    Args:
        frame (pandas.DataFrame): Output of ``pipeline.results_frame``.
        interpretation (str): Interpretation label to plot.
        path (Path): Target SVG file.
        signed (bool): Multiply by the sign column.

    Returns:
        Path: The written file.
    """
    rows = frame[frame["interpretation"] == interpretation]
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for branch, group in rows.groupby("branch", sort=False):
        style = {"linewidth": 2.5, "color": "black"} if branch == "overall" else {"linewidth": 1.0}
        ax.plot(group["phi"], _distance_column(group, signed), label=branch, **style)
    ax.set_xlabel("φ (rad)")
    ax.set_ylabel("Distance")
    ax.set_title(_legend_label(interpretation))
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right")
    return _save(fig, path)


def plot_overview(frame: pd.DataFrame, path: Path, signed: bool = False) -> Path:
    """Overall distance curves of all interpretations in one figure."""
    rows = frame[frame["branch"] == "overall"]
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for interpretation, group in rows.groupby("interpretation", sort=False):
        ax.plot(group["phi"], _distance_column(group, signed), label=_legend_label(interpretation))
    ax.set_xlabel("φ (rad)")
    ax.set_ylabel("Distance")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right", fontsize="small")
    return _save(fig, path)


def scale_kpis(frame: pd.DataFrame) -> pd.DataFrame:
    """M and V_raw min-max scaled to [0, 1], CN scaled by 5; other columns unchanged."""
    scaled = frame.copy()
    for column in ("M", "V_raw"):
        values = scaled[column].astype(float)
        low, high = np.nanmin(values), np.nanmax(values)
        scaled[column] = (values - low) / (high - low) if high > low else 0.0
    scaled["CN"] = scaled["CN"] * 5
    return scaled


def plot_kpis(frame: pd.DataFrame, path: Path) -> Path:
    """Comparison of all indices over the sweep, scaled for a common axis."""
    scaled = scale_kpis(frame)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for column in KPI_COLUMNS:
        ax.plot(scaled["phi"], scaled[column], label=column)
    ax.set_xlabel("φ (rad)")
    ax.set_ylabel("Index")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right", ncol=2, fontsize="small")
    return _save(fig, path)


def _draw(ax, K: Configuration, color: str, label: str):
    pts = np.real(np.asarray(K.points))
    rigid = len(pts) == 9
    legs = [(i, i + 3) for i in range(3)]
    if rigid:
        legs += [(i + 6, i) for i in range(3)]
    for n, (i, j) in enumerate(legs):
        ax.plot(pts[[i, j], 0], pts[[i, j], 1], color=color, linewidth=1.5, label=label if n == 0 else None)
    bodies = [(3, 4, 5), (6, 7, 8)] if rigid else [(0, 1, 2), (3, 4, 5)]
    for body in bodies:
        loop = list(body) + [body[0]]
        ax.fill(pts[list(body), 0], pts[list(body), 1], color=color, alpha=0.15)
        ax.plot(pts[loop, 0], pts[loop, 1], color=color, linewidth=1.0)
    ax.scatter(pts[:, 0], pts[:, 1], color=color, s=12, zorder=3)


def draw_configurations(K: Configuration, K_prime: Configuration, path: Path, title: str = "") -> Path:
    """
    Draw a configuration (green) and its closest singular configuration (red).

    Args:
        K (Configuration): Query configuration.
        K_prime (Configuration): Minimizer.
        path (Path): Target SVG file.
        title (str): Figure title.

    Returns:
        Path: The written file.
    """
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    _draw(ax, K, "green", "K")
    _draw(ax, K_prime, "red", "K'")
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.legend(loc="upper right")
    return _save(fig, path)
