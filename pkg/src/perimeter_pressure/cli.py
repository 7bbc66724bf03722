"""`pp` command line: scenario runs, sweeps and analysis dumps.

All commands accept --config (JSON, unknown keys ignored), --out and
--scale; see README for the config schema and CSV formats.  PP_THREADS caps
the scenario worker pool, PP_NUMBA=0 selects the pure-Python kernels.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .experiments import (
    ExperimentConfig,
    importance_dump,
    pressure_dump,
    robustness_sweep,
    run_baselines,
    sweep_heterogeneity,
    sweep_s_and_hops,
)


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.out:
        updates["out_dir"] = args.out
    if args.scale:
        updates["scale"] = True
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory (default from config)")
    p.add_argument("--scale", action="store_true", help="desk-scale mode: 4x4 grid, 3 seeds, 40%% demand")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="pp", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="compare the controller roster on one demand")
    _add_common(p)
    p.add_argument("--no-timeseries", action="store_true")

    p = sub.add_parser("sweep-sh", help="sensitivity x hop grid sweep")
    _add_common(p)

    p = sub.add_parser("sweep-hetero", help="tau x alpha improvement heatmap")
    _add_common(p)
    p.add_argument("--best-s", type=float, help="sensitivity of the selected controller")
    p.add_argument("--best-hop", type=int, help="hop count of the selected controller")

    p = sub.add_parser("robustness", help="turning-ratio perturbation sweep")
    _add_common(p)
    p.add_argument("--alphas", help="comma-separated perturbation degrees")

    p = sub.add_parser("pressure-dump", help="per-cycle feeder pressure snapshots")
    _add_common(p)
    p.add_argument("--hops", help="comma-separated hop counts (default 0,2,4,<hop>)")
    p.add_argument("--controller", choices=["homo", "softmax", "nmp", "equal"])

    p = sub.add_parser("importance", help="accumulative downstream importance of a feeder")
    _add_common(p)
    p.add_argument("--feeder", type=int, required=True)
    p.add_argument("--hops", type=int, default=20)
    p.add_argument("--uniform-ratios", action="store_true",
                   help="use uniform turning ratios instead of demand-derived ones")

    args = ap.parse_args(argv)
    cfg = _load_config(args)

    if args.cmd == "run":
        out = run_baselines(cfg, timeseries=not args.no_timeseries)
    elif args.cmd == "sweep-sh":
        out = sweep_s_and_hops(cfg)
    elif args.cmd == "sweep-hetero":
        best = None
        if args.best_s is not None and args.best_hop is not None:
            best = (args.best_s, args.best_hop)
        out = sweep_heterogeneity(cfg, best=best)
    elif args.cmd == "robustness":
        alphas = [float(a) for a in args.alphas.split(",")] if args.alphas else None
        out = robustness_sweep(cfg, alphas=alphas)
    elif args.cmd == "pressure-dump":
        hops = [int(h) for h in args.hops.split(",")] if args.hops else None
        out = pressure_dump(cfg, hops=hops, controller=args.controller)
    else:
        out = importance_dump(
            cfg, feeder=args.feeder, max_hop=args.hops,
            demand_derived=not args.uniform_ratios,
        )
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
