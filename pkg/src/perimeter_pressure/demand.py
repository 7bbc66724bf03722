"""Parametric heterogeneous demand profiles and trip sampling.

Demand is split into four streams: external trips from the upper and lower
feeder groups into their matching subregion, and internal trips generated
within each subregion.  Each stream distributes its total volume over
equal-length intervals with peaked weights [r^0, r^1, .., r^mid, .., r^1,
r^0].  Asynchrony tau delays the lower streams; imbalance alpha_upper splits
the internal total between the subregions:

    lower_external(t + tau) = upper_external(t)
    lower_internal(t + tau) / (1 - alpha_upper) = upper_internal(t) / alpha_upper
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGroupError, ParamError

log = logging.getLogger(__name__)

OD_STREAMS = (
    ("upper-feeders", "upper-subregion"),
    ("lower-feeders", "lower-subregion"),
    ("upper-subregion", "upper-subregion"),
    ("upper-subregion", "region"),
    ("lower-subregion", "lower-subregion"),
    ("lower-subregion", "region"),
)


def interval_weights(r: float, n_intervals: int) -> np.ndarray:
    """Symmetric peaked weights; r=2 over nine intervals gives [1,2,4,8,16,8,4,2,1]."""
    if r <= 0:
        raise ParamError("peakedness r must be positive")
    exps = [min(i, n_intervals - 1 - i) for i in range(n_intervals)]
    return np.array([float(r) ** e for e in exps])


@dataclass(frozen=True)
class DemandProfile:
    """Piecewise-constant OD rates over the simulation horizon."""

    horizon: float  # seconds
    tau: float
    alpha_upper: float
    n12: float
    n22: float
    # per stream: list of (start_s, end_s, volume_veh)
    stream_intervals: dict[tuple[str, str], tuple[tuple[float, float, float], ...]]
    truncated_veh: float = 0.0

    def rate(self, od: tuple[str, str], t: float) -> float:
        """Demand rate in veh/s at time t (intervals are right-open)."""
        for s, e, vol in self.stream_intervals[od]:
            if s <= t < e:
                return vol / (e - s)
        return 0.0

    def volume_between(self, t0: float, t1: float) -> float:
        """Total vehicles scheduled to depart in [t0, t1) across all streams."""
        total = 0.0
        for intervals in self.stream_intervals.values():
            for s, e, vol in intervals:
                overlap = min(e, t1) - max(s, t0)
                if overlap > 0:
                    total += vol * overlap / (e - s)
        return total

    def stream_total(self, od: tuple[str, str]) -> float:
        return sum(vol for _, _, vol in self.stream_intervals[od])


def build_profile(
    n12: float,
    n22: float,
    tau: float,
    alpha_upper: float,
    r: float = 2.0,
    horizon: float = 14400.0,
    n_intervals: int = 9,
    interval_len: float = 900.0,
    locality: float = 0.75,
) -> DemandProfile:
    """Construct the OD stream profile.

    tau is in seconds.  External volume splits evenly between the feeder
    groups (time-shifted only); internal volume splits alpha : 1-alpha by
    origin subregion, with a ``locality`` fraction of each subregion's trips
    ending in the origin subregion and the rest anywhere in the region.
    Intervals cut off at the horizon; any truncated volume is logged.
    """
    if not (0.0 < alpha_upper < 1.0):
        raise ParamError("alpha_upper must lie strictly between 0 and 1")
    if tau < 0 or tau > horizon:
        raise ParamError("tau must lie in [0, horizon]")
    if not (0.0 <= locality <= 1.0):
        raise ParamError("locality must lie in [0, 1]")
    shares = interval_weights(r, n_intervals)
    shares = shares / shares.sum()

    up, low = n22 * alpha_upper, n22 * (1.0 - alpha_upper)
    volumes = {
        ("upper-feeders", "upper-subregion"): (0.0, n12 / 2.0),
        ("lower-feeders", "lower-subregion"): (tau, n12 / 2.0),
        ("upper-subregion", "upper-subregion"): (0.0, up * locality),
        ("upper-subregion", "region"): (0.0, up * (1.0 - locality)),
        ("lower-subregion", "lower-subregion"): (tau, low * locality),
        ("lower-subregion", "region"): (tau, low * (1.0 - locality)),
    }
    streams = {}
    truncated = 0.0
    for od, (offset, total) in volumes.items():
        ivs = []
        for i in range(n_intervals):
            s = offset + i * interval_len
            e = s + interval_len
            vol = total * shares[i]
            if s >= horizon:
                truncated += vol
                continue
            if e > horizon:
                kept = vol * (horizon - s) / (e - s)
                truncated += vol - kept
                ivs.append((s, horizon, kept))
            else:
                ivs.append((s, e, vol))
        streams[od] = tuple(ivs)
    if truncated > 0:
        log.warning("demand truncated at horizon: %.1f vehicles dropped", truncated)
    return DemandProfile(
        horizon=horizon,
        tau=tau,
        alpha_upper=alpha_upper,
        n12=n12,
        n22=n22,
        stream_intervals=streams,
        truncated_veh=truncated,
    )


@dataclass
class TripList:
    """Sampled trips sorted by departure time."""

    t_depart: np.ndarray  # float seconds
    origin: np.ndarray  # link ids
    dest: np.ndarray  # link ids

    def __len__(self) -> int:
        return len(self.t_depart)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_depart_s", "origin_id", "dest_id"])
        for t, o, d in zip(self.t_depart, self.origin, self.dest):
            w.writerow([f"{t:.6f}", int(o), int(d)])
        return buf.getvalue()


def sample_trips(profile: DemandProfile, network, rng_seed: int) -> TripList:
    """Draw a concrete trip list from the profile.

    Per interval the trip count is round(volume); departure times are uniform
    within the interval and endpoints uniform within their group.  The draw
    is fully determined by the seed.
    """
    groups = network.groups()
    dest_groups = network.destination_groups()
    rng = np.random.default_rng(rng_seed)
    ts, origins, dests = [], [], []
    for od in OD_STREAMS:
        og, dg = od
        o_links = groups.get(og, [])
        d_links = dest_groups.get(dg, [])
        intervals = profile.stream_intervals[od]
        if any(vol > 0 for _, _, vol in intervals):
            if not o_links:
                raise EmptyGroupError(f"origin group {og!r} has no links")
            if not d_links:
                raise EmptyGroupError(f"destination group {dg!r} has no links")
        o_arr = np.asarray(o_links)
        d_arr = np.asarray(d_links)
        for s, e, vol in intervals:
            k = int(np.floor(vol + 0.5))
            if k <= 0:
                continue
            ts.append(rng.uniform(s, e, k))
            origins.append(o_arr[rng.integers(0, len(o_arr), k)])
            dests.append(d_arr[rng.integers(0, len(d_arr), k)])
    if not ts:
        return TripList(np.empty(0), np.empty(0, dtype=int), np.empty(0, dtype=int))
    t = np.concatenate(ts)
    o = np.concatenate(origins)
    d = np.concatenate(dests)
    order = np.lexsort((d, o, t))
    return TripList(t[order], o[order], d[order])
