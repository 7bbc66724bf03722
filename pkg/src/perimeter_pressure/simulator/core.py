"""Mesoscopic point-queue simulation of the gated grid.

Vehicles follow fixed shortest-hop paths.  A vehicle entering a link travels
its free-flow time, then waits in the link's vertical queue for its movement
to be served; service is capped by saturation flow, downstream spare
capacity (spillback) and, on feeder links, the metering budget assigned by
the perimeter controller once per control cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..control import TwoStageController
from ..errors import ConfigError, NoPathError, ParamError
from ..grid import GridNetwork
from ..network_graph import OMEGA, transition_matrix
from ..pressure import QueueDensityVector, multi_hop_pressure_profile
from ..signals import SignalPlan
from . import _kernels
from ._kernels import advance

UNREACHABLE = np.iinfo(np.int64).max // 2


@dataclass
class Assignment:
    """Fixed paths for every trip plus the empirical turning ratios."""

    paths: list
    flows: dict
    ratios: dict


def path_assignment(network: GridNetwork, trip_list) -> Assignment:
    """Shortest-hop path per trip, ties broken on the smallest next-link id.

    Also derives the turning ratios from the aggregate path flows; links that
    carry no flow fall back to a uniform split over their movements.
    """
    n = network.n_links
    succ: list[list[int]] = [[] for _ in range(n)]
    for m in network.movements:
        if m.to_id is not None:
            succ[m.from_id].append(m.to_id)
    for s in succ:
        s.sort()

    pred: list[list[int]] = [[] for _ in range(n)]
    for u in range(n):
        for v in succ[u]:
            pred[v].append(u)

    dist_cache: dict[int, np.ndarray] = {}

    def dist_to(d: int) -> np.ndarray:
        got = dist_cache.get(d)
        if got is not None:
            return got
        dist = np.full(n, UNREACHABLE, dtype=np.int64)
        dist[d] = 0
        frontier = [d]
        while frontier:
            nxt = []
            for v in frontier:
                for u in pred[v]:
                    if dist[u] == UNREACHABLE:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
            frontier = nxt
        dist_cache[d] = dist
        return dist

    paths = []
    flows: dict[tuple[int, int], float] = {}
    for o, d in zip(trip_list.origin, trip_list.dest):
        o, d = int(o), int(d)
        dist = dist_to(d)
        if dist[o] >= UNREACHABLE:
            raise NoPathError(f"destination {d} unreachable from {o}")
        path = [o]
        u = o
        while u != d:
            best, best_d = -1, UNREACHABLE
            for v in succ[u]:
                if dist[v] < best_d:
                    best, best_d = v, dist[v]
            flows[(u, best)] = flows.get((u, best), 0.0) + 1.0
            path.append(best)
            u = best
        paths.append(np.asarray(path, dtype=np.int64))
    return Assignment(paths=paths, flows=flows, ratios=network.ratios_from_movements(flows))


@dataclass
class Metrics:
    """Evaluation outputs of one scenario run."""

    tts_total: float  # vehicle-hours
    tts_inside: float
    tts_outside: float
    completion_times: np.ndarray  # seconds
    completion_curve: np.ndarray  # cumulative completed trips
    density_curve: np.ndarray  # protected-region mean occupancy density
    n_trips: int
    injected: int
    completed: int
    seed: int = 0
    pressure_snapshots: Optional[list] = None  # (cycle, feeder_id, hop, pressure)
    actions: Optional[np.ndarray] = None  # per cycle per feeder budgets
    feeder_flows: Optional[np.ndarray] = None  # per cycle per feeder served flow


class SimState:
    """Mutable simulation state over flat arrays (see _kernels for layout)."""

    def __init__(self, network: GridNetwork, paths, dep_ticks, dt=1.0,
                 duration=14400, sample_stride=96):
        if sorted(network.links) != list(range(network.n_links)):
            raise ConfigError("link ids must be dense 0..n-1")
        self.network = network
        self.dt = float(dt)
        self.t = 0
        self.duration = int(duration)
        n = network.n_links
        links = network.links
        self.storage = np.array([links[i].storage_capacity for i in range(n)])
        self.sat = np.array([links[i].saturation_flow for i in range(n)])
        self.fft = np.array(
            [max(1, round(links[i].length / (network.free_speed * dt))) for i in range(n)],
            dtype=np.int64,
        )
        self.is_feeder = np.array(
            [1 if links[i].kind == "feeder" else 0 for i in range(n)], dtype=np.uint8
        )
        self.is_inside = np.array(
            [0 if links[i].kind == "feeder" else 1 for i in range(n)], dtype=np.uint8
        )
        self.feeder_idx = np.full(n, -1, dtype=np.int64)
        for k, f in enumerate(network.feeder_ids):
            self.feeder_idx[f] = k
        self.occ = np.zeros(n, dtype=np.int64)
        self.occf = np.zeros(n)

        movs = network.movements
        self.mv_from = np.array([m.from_id for m in movs], dtype=np.int64)
        self.mv_to = np.array(
            [-1 if m.to_id is None else m.to_id for m in movs], dtype=np.int64
        )
        self.link_mv_start = np.zeros(n + 1, dtype=np.int64)
        for m in movs:
            self.link_mv_start[m.from_id + 1] += 1
        self.link_mv_start = np.cumsum(self.link_mv_start)
        if not np.all(np.diff(self.mv_from) >= 0):
            raise ConfigError("movements must be sorted by from-link")
        self.green = np.ascontiguousarray(network.green_matrix())
        self.signal_cycle = network.signal_plan.cycle

        caps = np.array([int(self.storage[m.from_id]) + 2 for m in movs], dtype=np.int64)
        self.mq_off = np.concatenate(([0], np.cumsum(caps)))
        self.mq_buf = np.zeros(self.mq_off[-1], dtype=np.int64)
        self.mq_head = np.zeros(len(movs), dtype=np.int64)
        self.mq_len = np.zeros(len(movs), dtype=np.int64)
        self.prog = np.zeros(len(movs))

        tcaps = np.array([int(self.storage[i]) + 2 for i in range(n)], dtype=np.int64)
        self.tr_off = np.concatenate(([0], np.cumsum(tcaps)))
        self.tr_v = np.zeros(self.tr_off[-1], dtype=np.int64)
        self.tr_t = np.zeros(self.tr_off[-1], dtype=np.int64)
        self.tr_head = np.zeros(n, dtype=np.int64)
        self.tr_len = np.zeros(n, dtype=np.int64)

        nv = len(paths)
        lens = np.array([len(p) for p in paths], dtype=np.int64)
        self.path_off = np.concatenate(([0], np.cumsum(lens)))
        self.path_data = (
            np.concatenate(paths).astype(np.int64) if nv else np.zeros(0, dtype=np.int64)
        )
        self.path_pos = np.full(nv, -1, dtype=np.int64)
        self.dep = np.asarray(dep_ticks, dtype=np.int64)
        if len(self.dep) != nv:
            raise ConfigError("one departure tick per path required")

        origins = self.path_data[self.path_off[:-1]] if nv else np.zeros(0, dtype=np.int64)
        self.org_link = np.unique(origins)
        order = np.lexsort((np.arange(nv), self.dep, origins)) if nv else np.zeros(0, np.int64)
        org_sorted = origins[order]
        self.org_veh = order.astype(np.int64)
        self.org_off = np.concatenate(
            (np.searchsorted(org_sorted, self.org_link), [nv])
        ).astype(np.int64)
        self.org_cur = np.zeros(len(self.org_link), dtype=np.int64)
        self.dep_sorted = np.sort(self.dep)

        nf = len(network.feeder_ids)
        self.budgets = np.zeros(nf)
        self.feeder_flow = np.zeros(nf)
        self.counts = np.zeros(8, dtype=np.int64)
        self.acc = np.zeros(4)
        self.sample_stride = int(sample_stride)
        k = self.duration // max(1, self.sample_stride) + 2
        self.ts_ptr = np.zeros(1, dtype=np.int64)
        self.ts_time = np.zeros(k, dtype=np.int64)
        self.ts_completed = np.zeros(k)
        self.ts_density = np.zeros(k)

    # -- queries ---------------------------------------------------------

    def queued(self, link: int) -> float:
        ms, me = self.link_mv_start[link], self.link_mv_start[link + 1]
        return float((self.mq_len[ms:me] - self.prog[ms:me]).sum())

    def queued_by_link(self) -> np.ndarray:
        return np.bincount(
            self.mv_from, weights=self.mq_len - self.prog, minlength=len(self.storage)
        )

    def queue_density_vector(self) -> QueueDensityVector:
        q = self.queued_by_link() / self.storage
        vals = np.append(np.clip(q, 0.0, 1.0), 0.0)
        ids = tuple(range(len(self.storage))) + (OMEGA,)
        return QueueDensityVector(values=vals, vertex_ids=ids)

    def region_density(self) -> float:
        inside = self.is_inside != 0
        return float((self.occ[inside] / self.storage[inside]).mean())

    def in_network(self) -> int:
        return int(self.occ.sum())

    def waiting(self) -> int:
        return int(self.counts[_kernels.DEP_PTR] - self.counts[_kernels.LOADED])

    # -- test helpers ------------------------------------------------------

    def force_queue(self, link: int, vehicle_ids) -> None:
        """Place vehicles directly into their movement queue (tests only)."""
        for v in vehicle_ids:
            self.path_pos[v] = 0
            off = self.path_off[v]
            plen = self.path_off[v + 1] - off
            nxt = self.path_data[off + 1] if plen > 1 else -1
            m = -1
            for mm in range(self.link_mv_start[link], self.link_mv_start[link + 1]):
                if self.mv_to[mm] == nxt:
                    m = mm
                    break
            if m < 0:
                raise ConfigError(f"no movement from {link} to {nxt}")
            qcap = self.mq_off[m + 1] - self.mq_off[m]
            tail = (self.mq_head[m] + self.mq_len[m]) % qcap
            self.mq_buf[self.mq_off[m] + tail] = v
            self.mq_len[m] += 1
            self.occ[link] += 1
            self.occf[link] += 1.0
            self.counts[_kernels.LOADED] += 1
            if self.is_inside[link]:
                self.counts[_kernels.N_INSIDE] += 1
            elif self.is_feeder[link]:
                self.counts[_kernels.N_FEEDER] += 1

    def set_budgets(self, values) -> None:
        v = np.asarray(values, dtype=float)
        if v.shape != self.budgets.shape:
            raise ConfigError("budget vector length != feeder count")
        self.budgets[:] = v
        self.feeder_flow[:] = 0.0

    # -- advancing ---------------------------------------------------------

    def run(self, n_steps: int) -> None:
        advance(
            self.t,
            int(n_steps),
            self.dt,
            self.signal_cycle,
            self.storage,
            self.sat,
            self.fft,
            self.feeder_idx,
            self.is_inside,
            self.is_feeder,
            self.occ,
            self.occf,
            self.link_mv_start,
            self.mv_to,
            self.green,
            self.mq_buf,
            self.mq_off,
            self.mq_head,
            self.mq_len,
            self.prog,
            self.tr_v,
            self.tr_t,
            self.tr_off,
            self.tr_head,
            self.tr_len,
            self.path_data,
            self.path_off,
            self.path_pos,
            self.dep,
            self.org_link,
            self.org_off,
            self.org_veh,
            self.org_cur,
            self.dep_sorted,
            self.budgets,
            self.feeder_flow,
            self.counts,
            self.acc,
            self.sample_stride,
            self.ts_ptr,
            self.ts_time,
            self.ts_completed,
            self.ts_density,
        )
        self.t += int(n_steps)


def step(state: SimState, dt: float = 1.0) -> SimState:
    """Advance the state by one tick (dt must match the state's tick)."""
    if abs(dt - state.dt) > 1e-12:
        raise ParamError("dt is fixed per state; rebuild to change it")
    state.run(1)
    return state


def run_scenario(
    network: GridNetwork,
    signal_plan: Optional[SignalPlan],
    trip_list,
    controller: TwoStageController,
    seed: int,
    duration: int = 14400,
    control_cycle: int = 96,
    dt: float = 1.0,
    sample_stride: int = 96,
    assignment: Optional[Assignment] = None,
    controller_matrix=None,
    pressure_hops: Optional[list] = None,
    record_flows: bool = False,
) -> Metrics:
    """Simulate one scenario under a bound two-stage controller.

    The controller sees, once per control cycle, the protected-region mean
    occupancy density, the number of trips scheduled to depart within the
    upcoming cycle, and the queue-density vector; its action becomes the
    feeder metering budgets for that cycle.  ``controller_matrix`` overrides
    the demand-derived transition matrix (turning-ratio perturbation).
    """
    if signal_plan is not None and signal_plan is not network.signal_plan:
        network.signal_plan = signal_plan
    if assignment is None:
        assignment = path_assignment(network, trip_list)
    matrix = controller_matrix
    if matrix is None:
        matrix = transition_matrix(network.graph_with_ratios(assignment.ratios))
    controller.bind(matrix, tuple(network.feeder_ids))
    controller.reset()

    dep_ticks = np.floor(np.asarray(trip_list.t_depart, dtype=float)).astype(np.int64)
    state = SimState(
        network,
        assignment.paths,
        dep_ticks,
        dt=dt,
        duration=duration,
        sample_stride=sample_stride,
    )
    dep_sorted = np.sort(dep_ticks)

    n_cycles = (duration + control_cycle - 1) // control_cycle
    nf = len(network.feeder_ids)
    actions = np.zeros((n_cycles, nf)) if record_flows else None
    flows = np.zeros((n_cycles, nf)) if record_flows else None
    snapshots = [] if pressure_hops else None

    for c in range(n_cycles):
        t = c * control_cycle
        qdv = state.queue_density_vector()
        future = float(
            np.searchsorted(dep_sorted, t + control_cycle) - np.searchsorted(dep_sorted, t)
        )
        action = controller.update(state.region_density(), future, qdv)
        if len(action.values) != nf:
            raise ConfigError("controller produced an action of the wrong size")
        state.set_budgets(action.values)
        if snapshots is not None:
            prof = multi_hop_pressure_profile(matrix, qdv, max(pressure_hops))
            fpos = [matrix.index[f] for f in network.feeder_ids]
            for hop in pressure_hops:
                for k, f in enumerate(network.feeder_ids):
                    snapshots.append((c, int(f), int(hop), float(prof[hop, fpos[k]])))
        if record_flows:
            actions[c] = action.values
        state.run(min(control_cycle, duration - t))
        if record_flows:
            flows[c] = state.feeder_flow

    tts_inside = float(state.acc[_kernels.TTS_INSIDE]) / 3600.0
    tts_outside = float(state.acc[_kernels.TTS_OUTSIDE]) / 3600.0
    k = int(state.ts_ptr[0])
    return Metrics(
        tts_total=tts_inside + tts_outside,
        tts_inside=tts_inside,
        tts_outside=tts_outside,
        completion_times=state.ts_time[:k].astype(float) * dt,
        completion_curve=state.ts_completed[:k].copy(),
        density_curve=state.ts_density[:k].copy(),
        n_trips=len(trip_list),
        injected=int(state.counts[_kernels.LOADED]),
        completed=int(state.counts[_kernels.COMPLETED]),
        seed=seed,
        pressure_snapshots=snapshots,
        actions=actions,
        feeder_flows=flows,
    )
