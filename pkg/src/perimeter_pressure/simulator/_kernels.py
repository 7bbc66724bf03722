"""Tick-level simulation kernel.

The same functions run either numba-compiled (default) or as pure Python on
numpy arrays, selected once at import time by the PP_NUMBA environment
variable ("0"/"false"/"off" forces the fallback).  Both paths execute the
identical statements in the identical order, so results are bit-equal;
benchmarks/bench_kernels.py measures the speed difference.

State layout: vehicles are discrete bodies living on exactly one link, either
in the link's travel pipeline (ring buffer of ready ticks) or in one of its
per-movement vertical queues.  Each movement additionally carries a
fractional service progress toward its head vehicle, so the effective queue
of a movement is (queued bodies - progress) and discharge follows

    flow = min(saturation share, effective queue, receiving spare, budget)

per tick.  Feeder movements draw down a per-cycle metering budget. ``occf``
tracks float occupancy (bodies plus granted-but-untransferred inflow) and is
what spare capacity is measured against, so reserved fractions can never
overfill a link.
"""

from __future__ import annotations

import os


def numba_requested() -> bool:
    return os.environ.get("PP_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


USING_NUMBA = False
if numba_requested():
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay runnable
        njit = None

if not USING_NUMBA:

    def njit(*args, **kwargs):  # noqa: D103 - identity decorator fallback
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# counter slots
DEP_PTR = 0
LOADED = 1
COMPLETED = 2
N_INSIDE = 3
N_FEEDER = 4

# accumulator slots (vehicle-seconds)
TTS_INSIDE = 0
TTS_OUTSIDE = 1


@njit(cache=True)
def _movement_of(link, nxt, link_mv_start, mv_to):
    for m in range(link_mv_start[link], link_mv_start[link + 1]):
        if mv_to[m] == nxt:
            return m
    return -1


@njit(cache=True)
def advance(
    t0,
    n_steps,
    dt,
    cycle_len,
    # links
    storage,
    sat,
    fft,
    feeder_idx,
    is_inside,
    is_feeder,
    occ,
    occf,
    # movements (CSR by from-link)
    link_mv_start,
    mv_to,
    green,
    mq_buf,
    mq_off,
    mq_head,
    mq_len,
    prog,
    # travel pipelines
    tr_v,
    tr_t,
    tr_off,
    tr_head,
    tr_len,
    # vehicles
    path_data,
    path_off,
    path_pos,
    dep,
    # origins
    org_link,
    org_off,
    org_veh,
    org_cur,
    dep_sorted,
    # control
    budgets,
    feeder_flow,
    # outputs
    counts,
    acc,
    stride,
    ts_ptr,
    ts_time,
    ts_completed,
    ts_density,
):
    n_links = storage.shape[0]
    n_veh = dep.shape[0]
    for step in range(n_steps):
        t = t0 + step
        tc = t % cycle_len

        # matured travellers join their movement queue
        for i in range(n_links):
            cap = tr_off[i + 1] - tr_off[i]
            while tr_len[i] > 0:
                idx = tr_off[i] + tr_head[i]
                if tr_t[idx] > t:
                    break
                v = tr_v[idx]
                tr_head[i] = (tr_head[i] + 1) % cap
                tr_len[i] -= 1
                p = path_pos[v]
                off = path_off[v]
                plen = path_off[v + 1] - off
                nxt = path_data[off + p + 1] if p + 1 < plen else -1
                m = _movement_of(i, nxt, link_mv_start, mv_to)
                qcap = mq_off[m + 1] - mq_off[m]
                tail = (mq_head[m] + mq_len[m]) % qcap
                mq_buf[mq_off[m] + tail] = v
                mq_len[m] += 1

        # discharge: two proportional passes so capacity blocked by a full
        # receiver is re-offered to the link's other green movements
        for i in range(n_links):
            ms = link_mv_start[i]
            me = link_mv_start[i + 1]
            if me == ms:
                continue
            satcap = sat[i] * dt
            fi = feeder_idx[i]
            for _pass in range(2):
                if satcap <= 1e-12:
                    break
                total_eq = 0.0
                for m in range(ms, me):
                    if green[m, tc] == 0:
                        continue
                    eq = mq_len[m] - prog[m]
                    if eq <= 1e-12:
                        continue
                    to = mv_to[m]
                    if to >= 0 and storage[to] - occf[to] <= 1e-12:
                        continue
                    total_eq += eq
                if total_eq <= 1e-12:
                    break
                share = satcap / total_eq
                for m in range(ms, me):
                    if green[m, tc] == 0:
                        continue
                    eq = mq_len[m] - prog[m]
                    if eq <= 1e-12:
                        continue
                    f = share * eq
                    if f > eq:
                        f = eq
                    to = mv_to[m]
                    if to >= 0:
                        spare = storage[to] - occf[to]
                        if f > spare:
                            f = spare
                    if fi >= 0 and f > budgets[fi]:
                        f = budgets[fi]
                    if f <= 0.0:
                        continue
                    prog[m] += f
                    satcap -= f
                    if to >= 0:
                        occf[to] += f
                    if fi >= 0:
                        budgets[fi] -= f
                        feeder_flow[fi] += f
                    qcap = mq_off[m + 1] - mq_off[m]
                    while prog[m] >= 1.0 - 1e-9 and mq_len[m] > 0:
                        prog[m] -= 1.0
                        v = mq_buf[mq_off[m] + mq_head[m]]
                        mq_head[m] = (mq_head[m] + 1) % qcap
                        mq_len[m] -= 1
                        occ[i] -= 1
                        occf[i] -= 1.0
                        if is_inside[i] != 0:
                            counts[N_INSIDE] -= 1
                        elif is_feeder[i] != 0:
                            counts[N_FEEDER] -= 1
                        if to < 0:
                            counts[COMPLETED] += 1
                        else:
                            occ[to] += 1
                            path_pos[v] += 1
                            tcap = tr_off[to + 1] - tr_off[to]
                            tail = (tr_head[to] + tr_len[to]) % tcap
                            tr_v[tr_off[to] + tail] = v
                            tr_t[tr_off[to] + tail] = t + fft[to]
                            tr_len[to] += 1
                            if is_inside[to] != 0:
                                counts[N_INSIDE] += 1
                            elif is_feeder[to] != 0:
                                counts[N_FEEDER] += 1
                    if prog[m] < 0.0:
                        prog[m] = 0.0

        # inject departed vehicles whose origin link has body space
        n_org = org_link.shape[0]
        for oi in range(n_org):
            i = org_link[oi]
            hi = org_off[oi + 1]
            while org_off[oi] + org_cur[oi] < hi:
                v = org_veh[org_off[oi] + org_cur[oi]]
                if dep[v] > t:
                    break
                if occf[i] > storage[i] - 1.0 + 1e-12:
                    break
                org_cur[oi] += 1
                counts[LOADED] += 1
                occ[i] += 1
                occf[i] += 1.0
                path_pos[v] = 0
                tcap = tr_off[i + 1] - tr_off[i]
                tail = (tr_head[i] + tr_len[i]) % tcap
                tr_v[tr_off[i] + tail] = v
                tr_t[tr_off[i] + tail] = t + fft[i]
                tr_len[i] += 1
                if is_inside[i] != 0:
                    counts[N_INSIDE] += 1
                elif is_feeder[i] != 0:
                    counts[N_FEEDER] += 1

        while counts[DEP_PTR] < n_veh and dep_sorted[counts[DEP_PTR]] <= t:
            counts[DEP_PTR] += 1
        waiting = counts[DEP_PTR] - counts[LOADED]

        acc[TTS_INSIDE] += counts[N_INSIDE] * dt
        acc[TTS_OUTSIDE] += (counts[N_FEEDER] + waiting) * dt

        if stride > 0 and (t + 1) % stride == 0:
            k = ts_ptr[0]
            if k < ts_time.shape[0]:
                ts_time[k] = t + 1
                ts_completed[k] = counts[COMPLETED]
                dens = 0.0
                cnt = 0
                for i in range(n_links):
                    if is_inside[i] != 0:
                        dens += occ[i] / storage[i]
                        cnt += 1
                ts_density[k] = dens / cnt if cnt > 0 else 0.0
                ts_ptr[0] = k + 1
