#!/usr/bin/env python3
"""Benchmark the simulation kernel: numba JIT vs pure-Python fallback.

The backend is chosen at import time from PP_NUMBA, so each side runs in a
subprocess.  The workload is one desk-scale scenario (4x4 grid, 40% demand,
4 h horizon); the JIT side reports compile and steady-state timings.

Usage: python3 benchmarks/bench_kernels.py [--repeats 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, os, time
import perimeter_pressure as pp
from perimeter_pressure.simulator import USING_NUMBA, path_assignment

net = pp.build_grid_network(4, 4)
prof = pp.build_profile(2400, 4400, tau=2700, alpha_upper=0.5, horizon=14400, locality=0.85)
trips = pp.sample_trips(prof, net, rng_seed=1)
asg = path_assignment(net, trips)

def one_run():
    homo = pp.LinearInflowPolicy(a_min=8/3, a_max=160/3, n_target=0.08, k_d=760.0, k_q=0.01)
    ctrl = pp.two_stage_controller(homo, "softmax", hop=8, sensitivity=8.0)
    return pp.run_scenario(net, None, trips, ctrl, seed=1, duration=14400, assignment=asg)

t0 = time.perf_counter()
m = one_run()
first = time.perf_counter() - t0
times = []
for _ in range(int(os.environ["BENCH_REPEATS"])):
    t0 = time.perf_counter()
    m = one_run()
    times.append(time.perf_counter() - t0)
print(json.dumps({
    "numba": USING_NUMBA,
    "first_s": first,
    "best_s": min(times),
    "tts_total_h": m.tts_total,
}))
"""


def run_side(numba: str, repeats: int) -> dict:
    env = dict(os.environ, PP_NUMBA=numba, BENCH_REPEATS=str(repeats))
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    jit = run_side("1", args.repeats)
    py = run_side("0", 1)
    if not jit["numba"]:
        print("warning: numba unavailable; both sides ran the fallback")
    print(f"{'backend':<14}{'first run':>12}{'steady run':>12}{'tts_total_h':>14}")
    print(f"{'numba':<14}{jit['first_s']:>11.2f}s{jit['best_s']:>11.3f}s{jit['tts_total_h']:>14.3f}")
    print(f"{'pure python':<14}{py['first_s']:>11.2f}s{py['best_s']:>11.3f}s{py['tts_total_h']:>14.3f}")
    if jit["tts_total_h"] != py["tts_total_h"]:
        print("MISMATCH: backends disagree on the metric")
        return 1
    speedup = py["best_s"] / jit["best_s"]
    print(f"speedup: {speedup:.0f}x, results identical")
    return 0


if __name__ == "__main__":
    sys.exit(main())
