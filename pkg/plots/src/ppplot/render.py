"""Figure rendering from experiment CSVs.

Pure consumers: inputs are validated against the documented schema before a
figure is created, and nothing is written when validation fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import LineCollection

from .schemas import KINDS, SchemaError, floats, load_rows


@dataclass(frozen=True)
class PlotJob:
    kind: str
    inputs: tuple
    out: Path
    options: dict = field(default_factory=dict)


def render(job: PlotJob) -> Path:
    """Validate inputs, draw the figure and write PNG/SVG to job.out."""
    if job.kind not in KINDS:
        raise SchemaError(f"unknown figure kind {job.kind!r}")
    if not job.inputs:
        raise SchemaError("at least one input CSV is required")
    tables = [load_rows(p, job.kind) for p in job.inputs]
    fig = _DRAWERS[job.kind](tables, job.options)
    out = Path(job.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _draw_sweep(tables, options):
    rows = tables[0]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    soft = [r for r in rows if r["controller"] == "softmax"]
    if not soft:
        raise SchemaError("sweep input holds no softmax rows")
    hops = sorted({int(r["hop"]) for r in soft})
    cmap = plt.get_cmap("viridis")
    for i, hop in enumerate(hops):
        pts = sorted(
            (float(r["sensitivity"]), float(r["tts_mean_h"]))
            for r in soft
            if int(r["hop"]) == hop
        )
        xs = [math.log2(s) if s > 0 else -1 for s, _ in pts]
        ax.plot(xs, [t for _, t in pts], marker="o", ms=3.5,
                color=cmap(i / max(1, len(hops) - 1)), label=f"{hop}-hop")
    homo = [float(r["tts_mean_h"]) for r in rows if r["controller"] == "homo"]
    if homo:
        ax.axhline(np.mean(homo), color="0.25", ls="--", lw=1.2, label="homogeneous")
    ax.set_xlabel("log2(sensitivity)")
    ax.set_ylabel("total time spent [veh h]")
    ax.set_title("TTS vs redistribution sensitivity")
    ax.legend(fontsize=7, ncol=2, frameon=False)
    fig.tight_layout()
    return fig


def _draw_heatmap(tables, options):
    rows = tables[0]
    taus = sorted({float(r["tau_hours"]) for r in rows})
    alphas = sorted({float(r["alpha_upper"]) for r in rows})
    grid = np.full((len(taus), len(alphas)), np.nan)
    for r in rows:
        i = taus.index(float(r["tau_hours"]))
        j = alphas.index(float(r["alpha_upper"]))
        grid[i, j] = float(r["improvement_pct"])
    fig, ax = plt.subplots(figsize=(1.1 * len(alphas) + 2, 0.9 * len(taus) + 1.5))
    lim = np.nanmax(np.abs(grid)) or 1.0
    im = ax.imshow(grid, cmap="RdYlGn", vmin=-lim, vmax=lim, origin="lower",
                   aspect="auto")
    for i in range(len(taus)):
        for j in range(len(alphas)):
            if not np.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.1f}", ha="center", va="center", fontsize=8)
    ax.set_xticks(range(len(alphas)), [f"{100 * a:.0f}%" for a in alphas])
    ax.set_yticks(range(len(taus)), [f"{t:g}" for t in taus])
    ax.set_xlabel("upper subregion internal demand share")
    ax.set_ylabel("demand shift [h]")
    ax.set_title("TTS improvement over homogeneous control [%]")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    return fig


def _draw_robustness(tables, options):
    rows = tables[0]
    soft = [r for r in rows if r["controller"] != "homo" and r["perturb_alpha"] != ""]
    if not soft:
        raise SchemaError("robustness input holds no perturbed rows")
    soft.sort(key=lambda r: float(r["perturb_alpha"]))
    x = [float(r["perturb_alpha"]) for r in soft]
    mean = [float(r["tts_mean_h"]) for r in soft]
    std = [float(r["tts_std_h"]) for r in soft]
    lo = [float(r["tts_min_h"]) for r in soft]
    hi = [float(r["tts_max_h"]) for r in soft]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.fill_between(x, lo, hi, color="tab:blue", alpha=0.15, label="min-max")
    ax.errorbar(x, mean, yerr=std, marker="o", color="tab:blue", capsize=3,
                label="heterogeneous (mean ± std)")
    homo = [float(r["tts_mean_h"]) for r in rows if r["controller"] == "homo"]
    if homo:
        ax.axhline(homo[0], color="0.25", ls="--", lw=1.2, label="homogeneous")
    ax.set_xlabel("perturbation degree")
    ax.set_ylabel("total time spent [veh h]")
    ax.set_title("Robustness to turning-ratio perturbation")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    return fig


def _draw_importance(tables, options):
    rows = tables[0]
    imp = np.array(floats(rows, "importance"))
    segs = [
        [(float(r["x0"]), float(r["y0"])), (float(r["x1"]), float(r["y1"]))]
        for r in rows
    ]
    fig, ax = plt.subplots(figsize=(6.5, 6))
    pos = imp[imp > 0]
    vmin = pos.min() if len(pos) else 1e-6
    shade = np.log10(np.maximum(imp, vmin / 10))
    lc = LineCollection(segs, cmap="inferno_r", linewidths=2.2)
    lc.set_array(shade)
    ax.add_collection(lc)
    src = [r for r in rows if int(r["hop_distance"]) == 0]
    for r in src:
        ax.plot([float(r["x0"]), float(r["x1"])], [float(r["y0"]), float(r["y1"])],
                color="tab:green", lw=3.5, label="feeder")
    ax.autoscale()
    ax.set_aspect("equal")
    ax.set_title("Accumulated downstream importance (log10)")
    ax.set_xticks([])
    ax.set_yticks([])
    if src:
        ax.legend(loc="upper right", fontsize=8, frameon=False)
    fig.colorbar(lc, ax=ax, shrink=0.8)
    fig.tight_layout()
    return fig


def _draw_pressure_profile(tables, options):
    rows = tables[0]
    cycles = sorted({int(r["cycle"]) for r in rows})
    cycle = int(options.get("cycle", cycles[len(cycles) // 2]))
    if cycle not in cycles:
        raise SchemaError(f"cycle {cycle} not present in the input")
    sel = [r for r in rows if int(r["cycle"]) == cycle]
    hops = sorted({int(r["hop"]) for r in sel})
    feeders = sorted({int(r["feeder_id"]) for r in sel})
    fig, ax = plt.subplots(figsize=(7, 4))
    cmap = plt.get_cmap("plasma")
    for i, hop in enumerate(hops):
        vals = {int(r["feeder_id"]): float(r["pressure"]) for r in sel if int(r["hop"]) == hop}
        ax.plot(feeders, [vals.get(f, np.nan) for f in feeders], marker="o", ms=3,
                color=cmap(i / max(1, len(hops) - 1)), label=f"{hop}-hop")
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("feeder link")
    ax.set_ylabel("pressure")
    ax.set_title(f"Feeder pressure profile, control cycle {cycle}")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    return fig


def _draw_timeseries_delta(tables, options):
    main = tables[0]
    t = np.array(floats(main, "time_s")) / 3600.0
    comp = np.array(floats(main, "completed"))
    dens = np.array(floats(main, "mean_density"))
    fig, axes = plt.subplots(2, 1, figsize=(7, 5.5), sharex=True)
    if len(tables) > 1:
        base = tables[1]
        if len(base) != len(main):
            raise SchemaError("baseline series length differs from the main series")
        comp = comp - np.array(floats(base, "completed"))
        dens = dens - np.array(floats(base, "mean_density"))
        axes[0].set_ylabel("completed trips vs baseline")
        axes[1].set_ylabel("mean density vs baseline")
        for ax in axes:
            ax.axhline(0.0, color="0.6", lw=0.8)
    else:
        axes[0].set_ylabel("completed trips")
        axes[1].set_ylabel("mean density")
    axes[0].plot(t, comp, color="tab:blue")
    axes[1].plot(t, dens, color="tab:red")
    axes[1].set_xlabel("time [h]")
    axes[0].set_title("Trip completion and network density")
    fig.tight_layout()
    return fig


_DRAWERS = {
    "sweep": _draw_sweep,
    "heatmap": _draw_heatmap,
    "robustness": _draw_robustness,
    "importance": _draw_importance,
    "pressure-profile": _draw_pressure_profile,
    "timeseries-delta": _draw_timeseries_delta,
}
