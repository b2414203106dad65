"""Figure rendering for run outputs.

Each saver takes data the run already produced (no re-simulation) and
writes a single PNG next to the delimited output files.  All figures use
the Agg backend so they render identically with or without a display.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .netmodel import Network
from .orchestrator import EmergencyResult
from .units import SECONDS_PER_HOUR, format_clock, parse_clock

REPORT_CUTOFF_S = parse_clock("18:00")  # ingestion ends here; later is flat

_FLUSH_STYLE = dict(marker="v", s=170.0, color="tab:red", edgecolor="black", zorder=5)
_DYE_STYLE = dict(marker="*", s=260.0, color="tab:purple", edgecolor="black", zorder=5)


def _clock_axis(ax, t0_s: float, t1_s: float) -> None:
    ticks = np.arange(
        np.floor(t0_s / SECONDS_PER_HOUR) * SECONDS_PER_HOUR,
        t1_s + 1.0,
        2 * SECONDS_PER_HOUR,
    )
    ax.set_xticks(ticks)
    ax.set_xticklabels([format_clock(t) for t in ticks])
    ax.set_xlim(t0_s, t1_s)
    ax.set_xlabel("time of day")


def save_utim_figure(result: EmergencyResult, path: str | Path) -> Path:
    """Incumbent vs no-response UTIM with update/execution markers."""
    t1 = min(REPORT_CUTOFF_S, result.horizon_s)
    samples = [s for s in result.samples if s.time_s <= t1 + 1e-6]
    times = np.array([s.time_s for s in samples])
    incumbent = np.array([s.incumbent_utim_g for s in samples])
    baseline = np.array([s.no_response_utim_g for s in samples])

    fig, ax = plt.subplots(figsize=(9, 5))
    ax.step(times, baseline, where="post", color="black", lw=1.4, label="no response")
    ax.plot(times, incumbent, color="tab:blue", lw=1.6, label="incumbent protocol")
    ax.fill_between(
        times, incumbent, baseline, where=baseline >= incumbent,
        color="tab:blue", alpha=0.12, label="confined impact",
    )
    seen = set()
    for t, kind, _ in result.events:
        if t > t1 or kind not in ("scenario-update", "execution"):
            continue
        color = "tab:orange" if kind == "scenario-update" else "tab:green"
        label = kind if kind not in seen else None
        seen.add(kind)
        ax.axvline(t, color=color, ls="--", lw=1.1, label=label)
    _clock_axis(ax, result.response_start_s, t1)
    ax.set_ylabel("projected ultimate ingested mass [g]")
    ax.set_ylim(bottom=0.0)
    ax.legend(loc="best", fontsize=9)
    ax.set_title("Projected impact of the tracked response protocol")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def save_impact_figure(
    net: Network,
    junction_ids: tuple[str, ...],
    impact_g: np.ndarray,
    path: str | Path,
    *,
    flush_nodes: tuple[str, ...] = (),
    dye_nodes: tuple[str, ...] = (),
    draw_pipes: bool = True,
) -> Path:
    """Network map shaded by projected per-junction ingested mass."""
    xy = {j.id: (j.x, j.y) for j in net.junctions}
    for r in net.reservoirs:
        xy[r.id] = (r.x, r.y)
    for t in net.tanks:
        xy[t.id] = (t.x, t.y)

    fig, ax = plt.subplots(figsize=(8, 8))
    if draw_pipes:
        for link in list(net.pipes) + list(net.pumps):
            (x0, y0), (x1, y1) = xy[link.start], xy[link.end]
            ax.plot([x0, x1], [y0, y1], color="0.82", lw=0.9, zorder=1)

    impact = np.asarray(impact_g, dtype=float)
    xs = np.array([xy[nid][0] for nid in junction_ids])
    ys = np.array([xy[nid][1] for nid in junction_ids])
    top = float(impact.max()) if impact.size and impact.max() > 0 else 1.0
    sizes = 22.0 + 420.0 * impact / top
    sc = ax.scatter(
        xs, ys, s=sizes, c=impact, cmap="YlOrRd", edgecolor="0.4",
        linewidth=0.5, zorder=3,
    )
    fig.colorbar(sc, ax=ax, shrink=0.8, label="projected ingested mass [g]")

    for r in net.reservoirs:
        ax.scatter(*xy[r.id], marker="s", s=120, color="tab:cyan",
                   edgecolor="black", zorder=4)
    for t in net.tanks:
        ax.scatter(*xy[t.id], marker="D", s=100, color="tab:gray",
                   edgecolor="black", zorder=4)
    for nid in flush_nodes:
        if nid in xy:
            ax.scatter(*xy[nid], **_FLUSH_STYLE)
    for nid in dye_nodes:
        if nid in xy:
            ax.scatter(*xy[nid], **_DYE_STYLE)
    handles = [
        plt.Line2D([], [], marker="v", ls="", color="tab:red", label="flush hydrant"),
        plt.Line2D([], [], marker="*", ls="", color="tab:purple", label="dye injection"),
        plt.Line2D([], [], marker="s", ls="", color="tab:cyan", label="source"),
        plt.Line2D([], [], marker="D", ls="", color="tab:gray", label="tank"),
    ]
    ax.legend(handles=handles, loc="upper right", fontsize=9)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("Spatial distribution of projected ingestion")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def save_tim_figure(
    series: dict[str, tuple[np.ndarray, np.ndarray]], path: str | Path
) -> Path:
    """Cumulative ingested-mass accumulation, one line per labelled run."""
    fig, ax = plt.subplots(figsize=(9, 5))
    t_max = 0.0
    for label, (times, tim) in series.items():
        ax.plot(times, tim, lw=1.6, label=label)
        t_max = max(t_max, float(times[-1]))
    _clock_axis(ax, 0.0, t_max)
    ax.set_ylabel("total ingested mass [g]")
    ax.set_ylim(bottom=0.0)
    ax.legend(loc="best", fontsize=9)
    ax.set_title("Ingested-mass accumulation")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def save_comparison_figure(
    runs: dict[str, EmergencyResult],
    path: str | Path,
    *,
    metric_label: str = "variant",
) -> Path:
    """Incumbent traces of several runs over a shared no-response line."""
    fig, ax = plt.subplots(figsize=(9, 5))
    t1 = REPORT_CUTOFF_S
    first = next(iter(runs.values()))
    base = [(s.time_s, s.no_response_utim_g) for s in first.samples if s.time_s <= t1]
    ax.step(*zip(*base), where="post", color="black", lw=1.4, label="no response")
    for label, result in runs.items():
        pts = [(s.time_s, s.incumbent_utim_g) for s in result.samples if s.time_s <= t1]
        area = result.confined_area_gram_hours()
        ax.plot(*zip(*pts), lw=1.5, label=f"{label} ({area:.1f} g·h confined)")
    _clock_axis(ax, first.response_start_s, t1)
    ax.set_ylabel("projected ultimate ingested mass [g]")
    ax.set_ylim(bottom=0.0)
    ax.legend(loc="best", fontsize=9, title=metric_label)
    ax.set_title("Response quality by " + metric_label)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)
