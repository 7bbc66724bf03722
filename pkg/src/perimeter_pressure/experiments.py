"""Experiment harness: parameter sweeps, robustness runs and CSV outputs.

Every scenario row carries full provenance (all parameters plus seed and
package version) and aggregate rows are recomputable from scenario rows.
Outputs are byte-reproducible for a fixed config.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import __version__ as _version
from .control import LinearInflowPolicy, PIInflowPolicy, TwoStageController
from .demand import build_profile, sample_trips
from .errors import ParamError
from .grid import GridNetwork, build_grid_network
from .network_graph import hop_distances, transition_matrix
from .perturbation import PerturbationSpec, perturb_turning_ratios
from .pressure import accumulative_importance
from .simulator import path_assignment, run_scenario


def default_s_grid() -> list:
    return [float(2**k) for k in range(8)]


def default_hop_grid() -> list:
    return list(range(0, 24, 2))


def default_tau_grid() -> list:
    return [0.0, 0.25, 0.5, 0.75, 1.0]


def default_alpha_grid() -> list:
    return [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80]


@dataclass
class ExperimentConfig:
    # network
    grid_rows: int = 6
    grid_cols: int = 6
    link_length_m: float = 85.0
    lanes: int = 2
    # demand
    n12: float = 6000.0
    n22: float = 13000.0
    tau_hours: float = 0.75
    alpha_upper: float = 0.5
    r: float = 2.0
    locality: float = 0.85
    # simulation
    duration_s: int = 14400
    control_cycle_s: int = 96
    sample_stride_s: int = 96
    # first stage
    homo_kind: str = "linear"  # or "pi"
    a_min: float = 4.0
    a_max: float = 80.0
    n_target: float = 0.08
    k_d: float = 760.0
    k_q: float = 0.01
    # second stage
    controller: str = "softmax"  # softmax | nmp | equal
    hop: int = 8
    sensitivity: float = 8.0
    critical_density: float = 0.06
    epsilon: float = 0.01
    # sweeps
    s_grid: list = field(default_factory=default_s_grid)
    hop_grid: list = field(default_factory=default_hop_grid)
    tau_grid_hours: list = field(default_factory=default_tau_grid)
    alpha_grid: list = field(default_factory=default_alpha_grid)
    hetero_n22: float = 8000.0
    seeds: list = field(default_factory=lambda: list(range(1, 11)))
    # robustness
    robustness_alphas: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    robustness_reps: int = 20
    robustness_sim_seed: int = 1
    perturb_m: float = 100.0
    perturb_routing: bool = False
    # output
    out_dir: str = "results"
    scale: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def desk_scaled(self) -> "ExperimentConfig":
        """Shrunk configuration for quick runs: 4x4 grid, 3 seeds, 40% demand."""
        factor = 0.4
        return replace(
            self,
            grid_rows=4,
            grid_cols=4,
            n12=round(self.n12 * factor),
            n22=round(self.n22 * factor),
            hetero_n22=round(self.hetero_n22 * factor),
            a_min=self.a_min * 16 / 24,
            a_max=self.a_max * 16 / 24,
            seeds=list(self.seeds[:3]),
            robustness_reps=min(self.robustness_reps, 5),
            scale=True,
        )

    def effective(self) -> "ExperimentConfig":
        return self.desk_scaled() if self.scale else self


def n_workers() -> int:
    env = os.environ.get("PP_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return 1


# --- scenario plumbing -------------------------------------------------------

_PREP_CACHE: dict = {}


def _network_for(cfg: ExperimentConfig) -> GridNetwork:
    return build_grid_network(cfg.grid_rows, cfg.grid_cols, cfg.link_length_m, cfg.lanes)


def _prepared(cfg: ExperimentConfig, tau_h: float, alpha: float, n22: float, seed: int):
    """Network, trips, assignment and matrix for one demand draw (memoized)."""
    key = (
        cfg.grid_rows, cfg.grid_cols, cfg.link_length_m, cfg.lanes,
        cfg.n12, n22, tau_h, alpha, cfg.r, cfg.locality, cfg.duration_s, seed,
    )
    got = _PREP_CACHE.get(key)
    if got is not None:
        return got
    net = _network_for(cfg)
    profile = build_profile(
        cfg.n12, n22, tau=tau_h * 3600.0, alpha_upper=alpha, r=cfg.r,
        horizon=float(cfg.duration_s), locality=cfg.locality,
    )
    trips = sample_trips(profile, net, rng_seed=seed)
    asg = path_assignment(net, trips)
    matrix = transition_matrix(net.graph_with_ratios(asg.ratios))
    out = (net, trips, asg, matrix)
    if len(_PREP_CACHE) > 32:
        _PREP_CACHE.clear()
    _PREP_CACHE[key] = out
    return out


def make_controller(cfg: ExperimentConfig, kind: Optional[str] = None,
                    hop: Optional[int] = None, s: Optional[float] = None) -> TwoStageController:
    kind = cfg.controller if kind is None else kind
    if cfg.homo_kind == "pi":
        homo = PIInflowPolicy(a_min=cfg.a_min, a_max=cfg.a_max, n_target=cfg.n_target)
    else:
        homo = LinearInflowPolicy(
            a_min=cfg.a_min, a_max=cfg.a_max, n_target=cfg.n_target, k_d=cfg.k_d, k_q=cfg.k_q
        )
    hetero = "equal" if kind == "homo" else kind
    return TwoStageController(
        homo_policy=homo,
        hetero_policy=hetero,
        hop=cfg.hop if hop is None else hop,
        sensitivity=cfg.sensitivity if s is None else s,
        critical_density=cfg.critical_density,
        epsilon=cfg.epsilon,
    )


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: str
    controller: str
    hop: int
    sensitivity: float
    tau_hours: float
    alpha_upper: float
    n22: float
    seed: int
    perturb_alpha: float = float("nan")
    perturb_seed: int = -1
    sim_seed: Optional[int] = None  # defaults to seed


SCENARIO_COLUMNS = [
    "scenario_id", "controller", "hop", "sensitivity", "tau_hours", "alpha_upper",
    "n12", "n22", "locality", "seed", "perturb_alpha", "perturb_seed",
    "grid_rows", "grid_cols", "a_min", "a_max",
    "tts_total_h", "tts_inside_h", "tts_outside_h", "completed", "injected",
    "n_trips", "version",
]


def run_spec(cfg: ExperimentConfig, spec: ScenarioSpec, timeseries_dir: Optional[Path] = None) -> dict:
    sim_seed = spec.seed if spec.sim_seed is None else spec.sim_seed
    net, trips, asg, matrix = _prepared(cfg, spec.tau_hours, spec.alpha_upper, spec.n22, sim_seed)
    ctrl = make_controller(cfg, spec.controller, spec.hop, spec.sensitivity)
    controller_matrix = matrix
    assignment = asg
    if spec.perturb_seed >= 0:
        pspec = PerturbationSpec(alpha=spec.perturb_alpha, m=cfg.perturb_m, seed=spec.perturb_seed)
        perturbed = perturb_turning_ratios(net.graph_with_ratios(asg.ratios), pspec)
        controller_matrix = transition_matrix(perturbed)
        if cfg.perturb_routing:
            assignment = _reroute_with_graph(net, trips, perturbed)
    metrics = run_scenario(
        net, None, trips, ctrl, seed=sim_seed, duration=cfg.duration_s,
        control_cycle=cfg.control_cycle_s, sample_stride=cfg.sample_stride_s,
        assignment=assignment, controller_matrix=controller_matrix,
    )
    if timeseries_dir is not None:
        _write_csv(
            timeseries_dir / f"ts_{spec.scenario_id}.csv",
            ["time_s", "completed", "mean_density"],
            [
                [f"{t:.0f}", f"{c:.0f}", f"{d:.9g}"]
                for t, c, d in zip(
                    metrics.completion_times, metrics.completion_curve, metrics.density_curve
                )
            ],
        )
    return {
        "scenario_id": spec.scenario_id,
        "controller": spec.controller,
        "hop": spec.hop,
        "sensitivity": f"{spec.sensitivity:.9g}",
        "tau_hours": f"{spec.tau_hours:.9g}",
        "alpha_upper": f"{spec.alpha_upper:.9g}",
        "n12": f"{cfg.n12:.9g}",
        "n22": f"{spec.n22:.9g}",
        "locality": f"{cfg.locality:.9g}",
        "seed": spec.seed,
        "perturb_alpha": "" if np.isnan(spec.perturb_alpha) else f"{spec.perturb_alpha:.9g}",
        "perturb_seed": "" if spec.perturb_seed < 0 else spec.perturb_seed,
        "grid_rows": cfg.grid_rows,
        "grid_cols": cfg.grid_cols,
        "a_min": f"{cfg.a_min:.9g}",
        "a_max": f"{cfg.a_max:.9g}",
        "tts_total_h": f"{metrics.tts_total:.17g}",
        "tts_inside_h": f"{metrics.tts_inside:.17g}",
        "tts_outside_h": f"{metrics.tts_outside:.17g}",
        "completed": metrics.completed,
        "injected": metrics.injected,
        "n_trips": metrics.n_trips,
        "version": _version,
    }


def _reroute_with_graph(net: GridNetwork, trips, perturbed_graph):
    """Paths re-weighted by -log(perturbed ratio); used by --perturb-routing."""
    # cost-minimizing deterministic paths under perturbed ratios; keeps OD pairs
    import heapq
    import math

    n = net.n_links
    succ: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for u in range(n):
        for v, rr in perturbed_graph.successors(u):
            if v >= 0:
                succ[u].append((v, 1.0 - math.log(max(rr, 1e-9))))
    paths = []
    flows: dict = {}
    cost_cache: dict = {}

    def costs_to(d):
        if d in cost_cache:
            return cost_cache[d]
        pred: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u in range(n):
            for v, w in succ[u]:
                pred[v].append((u, w))
        dist = np.full(n, np.inf)
        dist[d] = 0.0
        heap = [(0.0, d)]
        while heap:
            du, u = heapq.heappop(heap)
            if du > dist[u] + 1e-12:
                continue
            for v, w in pred[u]:
                nd = du + w
                if nd < dist[v] - 1e-12:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        cost_cache[d] = dist
        return dist

    from .errors import NoPathError

    for o, d in zip(trips.origin, trips.dest):
        o, d = int(o), int(d)
        dist = costs_to(d)
        if not np.isfinite(dist[o]):
            raise NoPathError(f"destination {d} unreachable from {o}")
        path = [o]
        u = o
        while u != d:
            best, best_c = -1, np.inf
            for v, w in succ[u]:
                c = w + dist[v]
                if c < best_c - 1e-12 or (abs(c - best_c) <= 1e-12 and v < best):
                    best, best_c = v, c
            flows[(u, best)] = flows.get((u, best), 0.0) + 1.0
            path.append(best)
            u = best
        paths.append(np.asarray(path, dtype=np.int64))
    from .simulator import Assignment

    return Assignment(paths=paths, flows=flows, ratios=net.ratios_from_movements(flows))


# --- CSV helpers -------------------------------------------------------------

def _write_csv(path, header: list, rows: Iterable) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    return path


def _write_rows(path, rows: list[dict]) -> Path:
    return _write_csv(path, SCENARIO_COLUMNS, [[r[c] for c in SCENARIO_COLUMNS] for r in rows])


def _run_all(cfg: ExperimentConfig, specs: list[ScenarioSpec],
             timeseries_dir: Optional[Path] = None) -> list[dict]:
    workers = n_workers()
    if workers <= 1:
        return [run_spec(cfg, s, timeseries_dir) for s in specs]
    import multiprocessing as mp

    ctx = mp.get_context("fork")
    with ctx.Pool(workers) as pool:
        return pool.starmap(run_spec, [(cfg, s, timeseries_dir) for s in specs])


# --- sweeps -------------------------------------------------------------------

def run_baselines(config: ExperimentConfig, timeseries: bool = True) -> Path:
    """Single-demand comparison of the controller roster (used by `pp run`)."""
    cfg = config.effective()
    out = Path(cfg.out_dir)
    roster = [
        ("homo", 0, 0.0),
        ("softmax", 2, cfg.sensitivity),
        ("softmax", cfg.hop, cfg.sensitivity),
        ("nmp", cfg.hop, cfg.sensitivity),
    ]
    specs = [
        ScenarioSpec(
            scenario_id=f"run_{kind}{hop}_s{seed}",
            controller=kind, hop=hop, sensitivity=s,
            tau_hours=cfg.tau_hours, alpha_upper=cfg.alpha_upper, n22=cfg.n22, seed=seed,
        )
        for kind, hop, s in roster
        for seed in cfg.seeds
    ]
    rows = _run_all(cfg, specs, out if timeseries else None)
    return _write_rows(out / "run_summary.csv", rows)


def sweep_s_and_hops(config: ExperimentConfig) -> Path:
    """TTS over the (sensitivity, hop) grid plus a homogeneous reference."""
    cfg = config.effective()
    out = Path(cfg.out_dir)
    specs = [
        ScenarioSpec(
            scenario_id=f"sh_s{s:g}_h{h}_seed{seed}",
            controller="softmax", hop=h, sensitivity=float(s),
            tau_hours=cfg.tau_hours, alpha_upper=cfg.alpha_upper, n22=cfg.n22, seed=seed,
        )
        for s in cfg.s_grid
        for h in cfg.hop_grid
        for seed in cfg.seeds
    ]
    specs += [
        ScenarioSpec(
            scenario_id=f"sh_homo_seed{seed}",
            controller="homo", hop=0, sensitivity=0.0,
            tau_hours=cfg.tau_hours, alpha_upper=cfg.alpha_upper, n22=cfg.n22, seed=seed,
        )
        for seed in cfg.seeds
    ]
    rows = _run_all(cfg, specs)
    _write_rows(out / "sweep_sh.csv", rows)

    # aggregate over seeds per (controller, s, h)
    agg: dict[tuple, list[float]] = {}
    for r in rows:
        agg.setdefault((r["controller"], r["sensitivity"], r["hop"]), []).append(
            float(r["tts_total_h"])
        )
    agg_rows = [
        [kind, s, h, len(v), f"{np.mean(v):.17g}", f"{np.std(v):.17g}"]
        for (kind, s, h), v in sorted(agg.items(), key=lambda kv: (kv[0][0], float(kv[0][1]), kv[0][2]))
    ]
    _write_csv(
        out / "sweep_sh_agg.csv",
        ["controller", "sensitivity", "hop", "n_seeds", "tts_mean_h", "tts_std_h"],
        agg_rows,
    )
    best = min(
        (r for r in agg_rows if r[0] == "softmax"), key=lambda r: float(r[4])
    )
    _write_csv(out / "sweep_sh_best.csv",
               ["controller", "sensitivity", "hop", "n_seeds", "tts_mean_h", "tts_std_h"],
               [best])
    return out / "sweep_sh.csv"


def sweep_heterogeneity(config: ExperimentConfig,
                        best: Optional[tuple] = None) -> Path:
    """Improvement heatmap over the (tau, alpha) grid at the sweep demand."""
    cfg = config.effective()
    out = Path(cfg.out_dir)
    s_best, h_best = best if best else (cfg.sensitivity, cfg.hop)
    specs = []
    for tau in cfg.tau_grid_hours:
        for alpha in cfg.alpha_grid:
            for seed in cfg.seeds:
                for kind, hop, s in (("homo", 0, 0.0), ("softmax", h_best, s_best)):
                    specs.append(
                        ScenarioSpec(
                            scenario_id=f"het_t{tau:g}_a{alpha:g}_{kind}_seed{seed}",
                            controller=kind, hop=hop, sensitivity=s,
                            tau_hours=float(tau), alpha_upper=float(alpha),
                            n22=cfg.hetero_n22, seed=seed,
                        )
                    )
    rows = _run_all(cfg, specs)
    _write_rows(out / "sweep_hetero_scenarios.csv", rows)

    cells = []
    for tau in cfg.tau_grid_hours:
        for alpha in cfg.alpha_grid:
            homo = [
                float(r["tts_total_h"]) for r in rows
                if r["controller"] == "homo"
                and float(r["tau_hours"]) == tau and float(r["alpha_upper"]) == alpha
            ]
            het = [
                float(r["tts_total_h"]) for r in rows
                if r["controller"] == "softmax"
                and float(r["tau_hours"]) == tau and float(r["alpha_upper"]) == alpha
            ]
            imp = 100.0 * (np.mean(homo) - np.mean(het)) / np.mean(homo)
            cells.append(
                [f"{tau:.9g}", f"{alpha:.9g}", f"{np.mean(homo):.17g}",
                 f"{np.mean(het):.17g}", f"{imp:.9g}", len(homo)]
            )
    return _write_csv(
        out / "sweep_hetero.csv",
        ["tau_hours", "alpha_upper", "tts_homo_mean_h", "tts_hetero_mean_h",
         "improvement_pct", "n_seeds"],
        cells,
    )


def robustness_sweep(config: ExperimentConfig, alphas: Optional[list] = None) -> Path:
    """Turning-ratio perturbation sweep at a fixed simulation seed."""
    cfg = config.effective()
    out = Path(cfg.out_dir)
    alphas = cfg.robustness_alphas if alphas is None else list(alphas)
    sim_seed = cfg.robustness_sim_seed
    specs = [
        ScenarioSpec(
            scenario_id=f"rob_a{alpha:g}_rep{rep}",
            controller="softmax", hop=cfg.hop, sensitivity=cfg.sensitivity,
            tau_hours=cfg.tau_hours, alpha_upper=cfg.alpha_upper, n22=cfg.n22,
            seed=sim_seed, perturb_alpha=float(alpha), perturb_seed=1000 + rep,
        )
        for alpha in alphas
        for rep in range(cfg.robustness_reps)
    ]
    specs.append(
        ScenarioSpec(
            scenario_id="rob_homo",
            controller="homo", hop=0, sensitivity=0.0,
            tau_hours=cfg.tau_hours, alpha_upper=cfg.alpha_upper, n22=cfg.n22,
            seed=sim_seed,
        )
    )
    rows = _run_all(cfg, specs)
    _write_rows(out / "robustness_scenarios.csv", rows)

    summary = []
    for alpha in alphas:
        v = [
            float(r["tts_total_h"]) for r in rows
            if r["controller"] == "softmax" and r["perturb_alpha"] == f"{alpha:.9g}"
        ]
        summary.append(
            ["softmax", f"{alpha:.9g}", len(v), f"{np.mean(v):.17g}", f"{np.std(v):.17g}",
             f"{min(v):.17g}", f"{max(v):.17g}"]
        )
    homo_tts = next(float(r["tts_total_h"]) for r in rows if r["controller"] == "homo")
    summary.append(["homo", "", 1, f"{homo_tts:.17g}", "0", f"{homo_tts:.17g}", f"{homo_tts:.17g}"])
    return _write_csv(
        out / "robustness.csv",
        ["controller", "perturb_alpha", "n_reps", "tts_mean_h", "tts_std_h",
         "tts_min_h", "tts_max_h"],
        summary,
    )


def importance_dump(config: ExperimentConfig, feeder: int, max_hop: int = 20,
                    demand_derived: bool = True) -> Path:
    """Accumulated downstream influence of one feeder, with link geometry."""
    cfg = config.effective()
    out = Path(cfg.out_dir)
    if demand_derived:
        net, _, asg, matrix = _prepared(
            cfg, cfg.tau_hours, cfg.alpha_upper, cfg.n22, cfg.seeds[0]
        )
        graph = net.graph_with_ratios(asg.ratios)
    else:
        net = _network_for(cfg)
        graph = net.uniform_graph()
        matrix = transition_matrix(graph)
    if feeder not in net.feeder_ids:
        raise ParamError(f"feeder {feeder} not a feeder link (0..{len(net.feeder_ids)-1})")
    imp = accumulative_importance(matrix, feeder, max_hop)
    dist = hop_distances(graph, feeder)
    rows = []
    for lid in sorted(imp):
        x0, y0, x1, y1 = net.geometry[lid]
        rows.append(
            [lid, dist.get(lid, -1), f"{imp[lid]:.9g}",
             f"{x0:.9g}", f"{y0:.9g}", f"{x1:.9g}", f"{y1:.9g}"]
        )
    return _write_csv(
        out / f"importance_f{feeder}_h{max_hop}.csv",
        ["link_id", "hop_distance", "importance", "x0", "y0", "x1", "y1"],
        rows,
    )


def pressure_dump(config: ExperimentConfig, hops: Optional[list] = None,
                  controller: Optional[str] = None) -> Path:
    """Per-cycle feeder pressure snapshots under a running controller."""
    cfg = config.effective()
    if controller:
        cfg = replace(cfg, controller=controller)
    out = Path(cfg.out_dir)
    hops = sorted(set(hops if hops else [0, 2, 4, cfg.hop]))
    net, trips, asg, matrix = _prepared(
        cfg, cfg.tau_hours, cfg.alpha_upper, cfg.n22, cfg.seeds[0]
    )
    ctrl = make_controller(cfg, "equal" if cfg.controller == "homo" else cfg.controller)
    metrics = run_scenario(
        net, None, trips, ctrl, seed=cfg.seeds[0], duration=cfg.duration_s,
        control_cycle=cfg.control_cycle_s, assignment=asg, pressure_hops=hops,
    )
    return _write_csv(
        out / f"pressures_{cfg.controller}.csv",
        ["cycle", "feeder_id", "hop", "pressure"],
        [[c, f, h, f"{p:.9g}"] for c, f, h, p in metrics.pressure_snapshots],
    )
