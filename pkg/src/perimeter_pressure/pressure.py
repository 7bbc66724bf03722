"""Multi-hop downstream pressure.

The h-hop pressure of a link starts from its own queue density and subtracts,
for every hop count h' up to h, the turning-ratio-weighted densities of all
links reachable by walks of exactly h' edges.  Because the extended graph's
adjacency matrix P is an absorbing Markov transition matrix, the hop-h'
contribution for all links at once is simply P^h' Q:

    p(0) = Q
    p(h) = p(h-1) - P^h Q            (recursive form)
    p(h) = Q - sum_{h'=1..h} P^h' Q  (unrolled form)

With densities normalized to [0, 1], pressures are monotonically
non-increasing in h and bounded to [-h, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ParamError, UnknownLinkError
from .network_graph import OMEGA, ExtendedGraph, TransitionMatrix


@dataclass(frozen=True)
class QueueDensityVector:
    """Per-vertex queue densities in [0, 1]; the supersink entry is 0."""

    values: np.ndarray
    vertex_ids: tuple[int, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.vertex_ids),):
            raise DimensionMismatchError(
                f"density length {v.shape} != vertex count {len(self.vertex_ids)}"
            )
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ParamError("queue densities must lie in [0, 1]")
        if self.vertex_ids and self.vertex_ids[-1] == OMEGA and v[-1] != 0.0:
            raise ParamError("supersink density must be 0")


@dataclass(frozen=True)
class PressureVector:
    """Per-vertex h-hop pressures in matrix vertex order."""

    hop: int
    values: np.ndarray
    vertex_ids: tuple[int, ...]

    def value_of(self, link_id: int) -> float:
        try:
            return float(self.values[self.vertex_ids.index(link_id)])
        except ValueError:
            raise UnknownLinkError(link_id) from None


@dataclass(frozen=True)
class PerimeterPressureVector:
    """Pressures of the gated feeder links, ordered by feeder index."""

    values: np.ndarray
    feeder_ids: tuple[int, ...]


def _as_array(P: TransitionMatrix, Q) -> np.ndarray:
    q = np.asarray(Q.values if isinstance(Q, QueueDensityVector) else Q, dtype=float)
    if q.shape != (P.n,):
        raise DimensionMismatchError(f"density length {q.shape[0]} != matrix size {P.n}")
    return q


def multi_hop_pressure(P: TransitionMatrix, Q, hops: int) -> PressureVector:
    """Pressures for every link simultaneously, one matrix-vector product per hop."""
    if hops < 0:
        raise ParamError("hops must be >= 0")
    q = _as_array(P, Q)
    p = q.copy()
    v = q.copy()
    for _ in range(hops):
        v = P.entries @ v
        p = p - v
    return PressureVector(hop=hops, values=p, vertex_ids=P.vertex_ids)


def multi_hop_pressure_profile(P: TransitionMatrix, Q, max_hop: int) -> np.ndarray:
    """Array of shape (max_hop+1, n) holding pressures for hops 0..max_hop."""
    if max_hop < 0:
        raise ParamError("max_hop must be >= 0")
    q = _as_array(P, Q)
    out = np.empty((max_hop + 1, P.n))
    out[0] = q
    v = q.copy()
    for h in range(1, max_hop + 1):
        v = P.entries @ v
        out[h] = out[h - 1] - v
    return out


def multi_hop_pressure_unrolled(P: TransitionMatrix, Q, hops: int) -> PressureVector:
    """Unrolled evaluation through explicit matrix powers (reference path)."""
    if hops < 0:
        raise ParamError("hops must be >= 0")
    q = _as_array(P, Q)
    p = q.copy()
    power = np.eye(P.n)
    for _ in range(hops):
        power = power @ P.entries
        p = p - power @ q
    return PressureVector(hop=hops, values=p, vertex_ids=P.vertex_ids)


def scalar_pressure_oracle(graph: ExtendedGraph, Q, link: int, hops: int) -> float:
    """Single-link pressure by explicit enumeration of downstream walks.

    Walks the nested-sum recursion directly: the hop-h term sums the product
    of the h turning ratios along every length-h walk times the density at
    the walk's end.  Exponential in h; meant as an independent cross-check of
    the vectorized path, not for production use.
    """
    if hops < 0:
        raise ParamError("hops must be >= 0")
    ids = graph.vertex_ids
    q = np.asarray(Q.values if isinstance(Q, QueueDensityVector) else Q, dtype=float)
    if q.shape != (len(ids),):
        raise DimensionMismatchError("density length does not match graph size")
    dens = {lid: q[i] for i, lid in enumerate(ids)}
    if link not in dens:
        raise UnknownLinkError(link)

    def walk_sum(u: int, steps: int) -> float:
        if steps == 0:
            return dens[u]
        return sum(r * walk_sum(v, steps - 1) for v, r in graph.successors(u))

    p = dens[link]
    for h in range(1, hops + 1):
        p -= walk_sum(link, h)
    return p


def perimeter_pressures(p: PressureVector, feeders) -> PerimeterPressureVector:
    """Extract feeder entries from a full pressure vector, in feeder order."""
    index = {lid: i for i, lid in enumerate(p.vertex_ids)}
    vals = np.empty(len(feeders))
    for k, f in enumerate(feeders):
        if f not in index:
            raise UnknownLinkError(f)
        vals[k] = p.values[index[f]]
    return PerimeterPressureVector(values=vals, feeder_ids=tuple(feeders))


def accumulative_importance(P: TransitionMatrix, feeder: int, max_hop: int) -> dict[int, float]:
    """Summed multi-step transition probabilities from one feeder.

    importance(j) = sum_{h'=1..max_hop} (P^h')[feeder, j]; the expected number
    of visits to j within max_hop steps.  Supersink mass is dropped from the
    result since it aggregates all completed trips.
    """
    if max_hop < 1:
        raise ParamError("max_hop must be >= 1")
    if feeder not in P.index:
        raise UnknownLinkError(feeder)
    row = np.zeros(P.n)
    row[P.index[feeder]] = 1.0
    acc = np.zeros(P.n)
    for _ in range(max_hop):
        row = row @ P.entries
        acc += row
    return {lid: float(acc[i]) for i, lid in enumerate(P.vertex_ids) if lid != OMEGA}
