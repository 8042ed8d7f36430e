"""Trajectory visualization: top-down path plot plus a CSV of the series."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Circle, Rectangle

from .harness import EpisodeRecord


def emit_plot(record: EpisodeRecord, out_path: Union[str, Path]) -> tuple[Path, Path]:
    """Write a top-down (x, y) trajectory figure and a CSV of the tick series.

    The figure shows the flown path, per-plan markers, planned waypoints,
    targets (initial positions, to-scale radius), and obstacle footprints.
    Returns (figure_path, csv_path); the CSV sits next to the figure.
    """
    if not record.tick_rows:
        raise ValueError("record has no tick rows to plot")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    xs = [row["state"][0] for row in record.tick_rows]
    ys = [row["state"][1] for row in record.tick_rows]

    fig, ax = plt.subplots(figsize=(7, 7))
    scene = record.header["scene"]["scene"]

    for ob in scene.get("obstacles", []):
        (x1, y1, _), (x2, y2, _) = ob["min_m"], ob["max_m"]
        ax.add_patch(Rectangle((x1, y1), x2 - x1, y2 - y1, facecolor="#c05046",
                               edgecolor="#7c2d25", alpha=0.7,
                               label=ob.get("label") or None))
    for tgt in scene.get("targets", []):
        x, y, _ = tgt["position_m"]
        ax.add_patch(Circle((x, y), tgt.get("radius_m", 0.5), facecolor="#5ac878",
                            edgecolor="#2d7c44", alpha=0.8))
        ax.annotate(tgt["id"], (x, y), textcoords="offset points", xytext=(6, 6),
                    fontsize=8)

    ax.plot(xs, ys, "-", color="#2a6fb0", linewidth=1.4, label="path")
    ax.plot(xs[0], ys[0], "s", color="#2a6fb0", markersize=7, label="start")

    tick_by_k = {row["k"]: row for row in record.tick_rows}
    plan_xy = []
    wp_xy = []
    for row in record.apply_rows:
        tick = tick_by_k.get(row["tick"])
        if tick is not None:
            plan_xy.append((tick["state"][0], tick["state"][1]))
        derived = row.get("derived", {})
        if "world_target_m" in derived:
            wp_xy.append(derived["world_target_m"][:2])
    if plan_xy:
        ax.plot([p[0] for p in plan_xy], [p[1] for p in plan_xy], "x",
                color="#6b3fa0", markersize=8, label="plans")
    if wp_xy:
        ax.plot([p[0] for p in wp_xy], [p[1] for p in wp_xy], "+",
                color="#b0762a", markersize=9, label="waypoints")

    metrics = record.header.get("metrics", {})
    ax.set_title(f"terminal={metrics.get('terminal', '?')}  "
                 f"time={metrics.get('completion_time_s', 0.0):.1f}s  "
                 f"path={metrics.get('path_length_m', 0.0):.1f}m")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.savefig(out_path, bbox_inches="tight")
    plt.close(fig)

    csv_path = out_path.with_suffix(".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["k", "t_s", "x_m", "y_m", "z_m", "yaw_rad",
                         "rc_roll", "rc_pitch", "rc_throttle", "rc_yaw_rate", "plan_seq"])
        for row in record.tick_rows:
            writer.writerow([row["k"], row["t"], *row["state"], *row["rc"],
                             row["plan_seq"] if row["plan_seq"] is not None else ""])
    return out_path, csv_path
