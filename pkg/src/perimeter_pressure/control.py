"""Two-stage perimeter control.

Stage one is a homogeneous policy mapping (protected-region density, future
demand) to the total permitted inflow A_t per control cycle.  Stage two
redistributes A_t over the feeder links: Softmax over sensitivity-scaled
multi-hop pressures, an equal-weight cluster-density baseline, or a plain
equal split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, ParamError
from .network_graph import OMEGA, TransitionMatrix
from .pressure import (
    PerimeterPressureVector,
    PressureVector,
    multi_hop_pressure,
    perimeter_pressures,
)

#: HomogeneousPolicy: (region_density, future_demand_veh) -> A_t veh/cycle
HomogeneousPolicy = Callable[[float, float], float]


@dataclass(frozen=True)
class ControlAction:
    """Permitted inflow per feeder for one control cycle; sums to A_t."""

    values: np.ndarray
    feeder_ids: tuple[int, ...]

    @property
    def total(self) -> float:
        return float(self.values.sum())


def softmax_redistribute(a_total: float, pressures, sensitivity: float) -> ControlAction:
    """Split A_t proportionally to exp(s * pressure), computed in log space.

    s = 0 is the explicit equal-split limit.  Conservation is exact up to
    float tolerance; a common shift of all pressures leaves the split
    unchanged.
    """
    if sensitivity < 0:
        raise ParamError("sensitivity must be >= 0")
    if isinstance(pressures, PerimeterPressureVector):
        p = pressures.values
        ids = pressures.feeder_ids
    else:
        p = np.asarray(pressures, dtype=float)
        ids = tuple(range(len(p)))
    if len(p) == 0:
        raise ParamError("need at least one feeder")
    if sensitivity == 0.0:
        return ControlAction(values=np.full(len(p), a_total / len(p)), feeder_ids=ids)
    z = sensitivity * p
    z = z - z.max()
    w = np.exp(z)
    w = w / w.sum()
    return ControlAction(values=a_total * w, feeder_ids=ids)


def nmp_redistribute(
    a_total: float,
    cluster_densities,
    region_density: float,
    critical_density: float,
    epsilon: float = 0.01,
    feeder_ids: Optional[tuple] = None,
) -> ControlAction:
    """Equal-weight cluster baseline.

    Below the critical region density every feeder gets the same share.
    Above it, feeders are weighted by the remaining headroom of their
    downstream cluster, max(eps, critical - cluster density), so congested
    clusters are deprioritized.
    """
    cd = np.asarray(cluster_densities, dtype=float)
    ids = feeder_ids if feeder_ids is not None else tuple(range(len(cd)))
    if region_density <= critical_density:
        w = np.full(len(cd), 1.0 / len(cd))
    else:
        w = np.maximum(epsilon, critical_density - cd)
        w = w / w.sum()
    return ControlAction(values=a_total * w, feeder_ids=tuple(ids))


@dataclass
class LinearInflowPolicy:
    """Saturating linear surrogate for the pre-trained first stage.

    A_t = clamp(a_max - k_d * max(0, density - n_target) - k_q * future_demand),
    monotone non-increasing in both congestion and upcoming demand.
    """

    a_min: float
    a_max: float
    n_target: float = 0.25
    k_d: float = 0.0  # default set in __post_init__
    k_q: float = 0.0

    def __post_init__(self):
        if self.a_min > self.a_max:
            raise ParamError("a_min must not exceed a_max")
        if self.k_d == 0.0:
            self.k_d = 4.0 * (self.a_max - self.a_min)

    def __call__(self, density: float, future_demand: float) -> float:
        a = self.a_max - self.k_d * max(0.0, density - self.n_target) - self.k_q * future_demand
        return float(min(self.a_max, max(self.a_min, a)))

    def reset(self):
        pass


@dataclass
class PIInflowPolicy:
    """Discrete PI regulator holding the region density at a set point."""

    a_min: float
    a_max: float
    n_target: float = 0.25
    k_p: float = 40.0
    k_i: float = 10.0
    _a_prev: float = field(init=False, default=0.0)
    _e_prev: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.a_min > self.a_max:
            raise ParamError("a_min must not exceed a_max")
        self.reset()

    def reset(self):
        self._a_prev = self.a_max
        self._e_prev = 0.0

    def __call__(self, density: float, future_demand: float) -> float:
        e = density - self.n_target
        a = self._a_prev - self.k_p * (e - self._e_prev) - self.k_i * e
        a = float(min(self.a_max, max(self.a_min, a)))
        self._a_prev = a
        self._e_prev = e
        return a


def surrogate_homogeneous(density: float, future_demand: float, params: dict) -> float:
    """One-shot evaluation of the linear surrogate with a params dict."""
    pol = LinearInflowPolicy(
        a_min=params["a_min"],
        a_max=params["a_max"],
        n_target=params.get("n_target", 0.25),
        k_d=params.get("k_d", 0.0),
        k_q=params.get("k_q", 0.0),
    )
    return pol(density, future_demand)


HETERO_KINDS = ("softmax", "nmp", "equal")


@dataclass
class TwoStageController:
    """Computes A_t then splits it; bound to a network before use."""

    homo_policy: HomogeneousPolicy
    hetero_policy: str = "softmax"
    hop: int = 8
    sensitivity: float = 8.0
    critical_density: float = 0.5
    epsilon: float = 0.01
    matrix: Optional[TransitionMatrix] = None
    feeder_ids: tuple[int, ...] = ()
    _clusters: Optional[list[np.ndarray]] = field(init=False, default=None, repr=False)

    def __post_init__(self):
        if self.hetero_policy not in HETERO_KINDS:
            raise ParamError(f"unknown hetero policy {self.hetero_policy!r}")
        if self.hop < 0:
            raise ParamError("hop must be >= 0")
        if self.matrix is not None and self.feeder_ids:
            self.bind(self.matrix, self.feeder_ids)

    def bind(self, matrix: TransitionMatrix, feeder_ids) -> None:
        """Attach the network's transition matrix and gated feeder set."""
        missing = [f for f in feeder_ids if f not in matrix.index]
        if missing:
            raise ConfigError(f"feeders {missing} not present in the network graph")
        self.matrix = matrix
        self.feeder_ids = tuple(feeder_ids)
        if self.hetero_policy == "nmp":
            self._clusters = self._downstream_clusters()

    def _downstream_clusters(self) -> list[np.ndarray]:
        """Indices of every link reachable within 1..hop steps of each feeder."""
        P = self.matrix.entries
        omega_col = self.matrix.index[OMEGA]
        clusters = []
        for f in self.feeder_ids:
            row = np.zeros(P.shape[0])
            row[self.matrix.index[f]] = 1.0
            member = np.zeros(P.shape[0], dtype=bool)
            for _ in range(max(1, self.hop)):
                row = row @ P
                member |= row > 0.0
            member[omega_col] = False
            clusters.append(np.flatnonzero(member))
        return clusters

    def reset(self):
        if hasattr(self.homo_policy, "reset"):
            self.homo_policy.reset()

    def update(self, region_density: float, future_demand: float, queue_density) -> ControlAction:
        """One control-cycle decision from macro and micro state."""
        if self.matrix is None or not self.feeder_ids:
            raise ConfigError("controller not bound to a network")
        a_total = float(self.homo_policy(region_density, future_demand))
        if self.hetero_policy == "equal":
            n = len(self.feeder_ids)
            return ControlAction(values=np.full(n, a_total / n), feeder_ids=self.feeder_ids)
        if self.hetero_policy == "softmax":
            p = multi_hop_pressure(self.matrix, queue_density, self.hop)
            return softmax_redistribute(
                a_total, perimeter_pressures(p, self.feeder_ids), self.sensitivity
            )
        q = np.asarray(
            queue_density.values if hasattr(queue_density, "values") else queue_density
        )
        cd = np.array([q[idx].mean() if len(idx) else 0.0 for idx in self._clusters])
        return nmp_redistribute(
            a_total,
            cd,
            region_density,
            self.critical_density,
            self.epsilon,
            feeder_ids=self.feeder_ids,
        )


def two_stage_controller(
    homo_policy: HomogeneousPolicy,
    hetero_policy: str,
    hop: int = 8,
    sensitivity: float = 8.0,
    **kwargs,
) -> TwoStageController:
    """Factory mirroring the controller roster used in the experiments."""
    return TwoStageController(
        homo_policy=homo_policy,
        hetero_policy=hetero_policy,
        hop=hop,
        sensitivity=sensitivity,
        **kwargs,
    )
