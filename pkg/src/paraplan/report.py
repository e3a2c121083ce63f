"""Figure rendering for simulation reports.

Draws the abstract dispatch map (vehicles, routes, the outstanding request,
the recommendation arrow) and a per-epoch metrics chart. Figures land next to
the delimited metrics output of ``paraplan simulate``.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .model import State, StopKind

_VEHICLE_COLORS = ("tab:blue", "tab:green", "tab:red", "tab:orange", "tab:purple", "tab:brown")


def render_map(state: State, recommended_vehicle: int | None, path: str | Path) -> Path:
    """One epoch snapshot: vehicle markers, planned routes, request endpoints."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for idx, vehicle in enumerate(state.vehicles):
        color = _VEHICLE_COLORS[idx % len(_VEHICLE_COLORS)]
        x, y = vehicle.location.display_x, vehicle.location.display_y
        ax.scatter([x], [y], marker="s", s=140, color=color, zorder=3)
        ax.annotate(f"v{vehicle.id}", (x, y), textcoords="offset points", xytext=(8, 8))
        if vehicle.route:
            xs = [x] + [s.location.display_x for s in vehicle.route]
            ys = [y] + [s.location.display_y for s in vehicle.route]
            ax.plot(xs, ys, color=color, linestyle="--", linewidth=1.2, zorder=2)
            for stop in vehicle.route:
                marker = "^" if stop.kind == StopKind.PICKUP else "v"
                ax.scatter(
                    [stop.location.display_x], [stop.location.display_y],
                    marker=marker, s=50, color=color, zorder=3,
                )
    request = state.outstanding
    if request is not None:
        ax.scatter([request.l_p.display_x], [request.l_p.display_y], marker="*", s=220,
                   color="black", zorder=4)
        ax.annotate(f"r{request.id}", (request.l_p.display_x, request.l_p.display_y),
                    textcoords="offset points", xytext=(8, -12))
        ax.scatter([request.l_d.display_x], [request.l_d.display_y], marker="X", s=120,
                   color="gray", zorder=4)
        if recommended_vehicle is not None:
            vehicle = state.vehicle(recommended_vehicle)
            ax.annotate(
                "",
                xy=(request.l_p.display_x, request.l_p.display_y),
                xytext=(vehicle.location.display_x, vehicle.location.display_y),
                arrowprops=dict(arrowstyle="-|>", color="black", linewidth=1.6),
            )
    ax.set_title(f"t = {state.time} min")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_metrics(rows: list[dict], path: str | Path) -> Path:
    """Service rate and timing deviations across epochs."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    epochs = [row["epoch"] for row in rows]
    ax1.bar(epochs, [row["service_rate"] for row in rows], color="tab:blue")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("service rate")
    ax1.set_ylim(0, 1.05)
    ax1.set_title("Served fraction of assigned requests")
    ax2.plot(epochs, [row["mean_pickup_dev"] for row in rows], marker="o", label="pickup")
    ax2.plot(epochs, [row["mean_dropoff_dev"] for row in rows], marker="s", label="drop-off")
    ax2.axhline(0.0, color="gray", linewidth=0.8)
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("mean deviation (min, early > 0)")
    ax2.set_title("Timing deviations")
    ax2.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
