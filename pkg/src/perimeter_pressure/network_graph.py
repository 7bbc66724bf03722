"""Supersink-extended graph representation of a traffic network.

Links are vertices; a directed edge (u, v) weighted by the turning ratio
T_uv says a vehicle leaving link u enters link v with probability T_uv.
All destinations are merged into a single absorbing supersink vertex with
zero queue density, so the weighted adjacency matrix of the extended graph
is a row-stochastic transition matrix of an absorbing Markov chain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DanglingLinkError, ParamError, RowSumError, UnknownLinkError

#: Sentinel vertex id for the absorbing supersink.
OMEGA = -1

#: Tolerance for accepting input row sums; rows are renormalized afterwards.
ROW_SUM_INPUT_TOL = 1e-6

VALID_KINDS = ("internal", "feeder", "exit", "source-connector")

JAM_SPACING_M = 7.5  # vehicle length + standstill gap used for default storage


@dataclass(frozen=True)
class Link:
    """A directed traffic link.

    storage_capacity defaults to floor(length * lanes / 7.5 m) when not given;
    saturation_flow defaults to 0.5 veh/s per lane.
    """

    id: int
    length: float = 85.0
    lanes: int = 2
    storage_capacity: float = 0.0
    saturation_flow: float = 0.0
    kind: str = "internal"

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ParamError(f"unknown link kind {self.kind!r}")
        if self.lanes < 1:
            raise ParamError(f"link {self.id}: lanes must be >= 1")
        if self.length <= 0:
            raise ParamError(f"link {self.id}: length must be positive")
        if self.storage_capacity == 0.0:
            object.__setattr__(
                self, "storage_capacity", float(int(self.length * self.lanes / JAM_SPACING_M))
            )
        if self.saturation_flow == 0.0:
            object.__setattr__(self, "saturation_flow", 0.5 * self.lanes)
        if self.storage_capacity <= 0 or self.saturation_flow <= 0:
            raise ParamError(f"link {self.id}: capacity and saturation flow must be positive")


class ExtendedGraph:
    """Immutable link graph extended with the absorbing supersink.

    Vertex order is sorted link id followed by the supersink; this order is
    shared by the transition matrix and every state vector in the package.
    """

    def __init__(self, links: Mapping[int, Link], ratios: Mapping[int, dict]):
        self._links = dict(links)
        self._vertex_ids = sorted(self._links) + [OMEGA]
        self._index = {lid: i for i, lid in enumerate(self._vertex_ids)}
        # successors[u] is a list of (v, ratio) sorted by v, supersink last
        self._succ: dict[int, list[tuple[int, float]]] = {}
        for lid in self._vertex_ids:
            out = ratios.get(lid, {})
            ordered = sorted(
                out.items(), key=lambda kv: (kv[0] == OMEGA, kv[0])
            )
            self._succ[lid] = [(v, float(r)) for v, r in ordered if r > 0.0]

    @property
    def links(self) -> dict[int, Link]:
        return dict(self._links)

    @property
    def vertex_ids(self) -> list[int]:
        """All vertex ids in matrix order (supersink last)."""
        return list(self._vertex_ids)

    @property
    def n_vertices(self) -> int:
        return len(self._vertex_ids)

    def index_of(self, link_id: int) -> int:
        try:
            return self._index[link_id]
        except KeyError:
            raise UnknownLinkError(link_id) from None

    def successors(self, link_id: int) -> list[tuple[int, float]]:
        if link_id not in self._index:
            raise UnknownLinkError(link_id)
        return list(self._succ[link_id])

    def turning_ratio(self, u: int, v: int) -> float:
        for w, r in self.successors(u):
            if w == v:
                return r
        return 0.0

    def exit_link_ids(self) -> list[int]:
        return sorted(l.id for l in self._links.values() if l.kind == "exit")


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic weighted adjacency matrix of an extended graph.

    Block form [[T, t_omega], [0, 1]]: the trailing row/column belongs to the
    supersink, whose row is the unit vector on its own column.
    """

    entries: np.ndarray
    vertex_ids: tuple[int, ...]
    index: Mapping[int, int] = field(repr=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def row_of(self, link_id: int) -> np.ndarray:
        try:
            return self.entries[self.index[link_id]]
        except KeyError:
            raise UnknownLinkError(link_id) from None


def build_extended_graph(
    links: Iterable[Link],
    edges: Iterable[tuple[int, int]],
    turning_ratios: Mapping[tuple[int, int], float],
) -> ExtendedGraph:
    """Append the supersink to a link graph and validate stochasticity.

    Exit links get their single outgoing edge to the supersink with ratio 1
    and the supersink a self-loop with ratio 1.  Every other link's outgoing
    ratios must sum to 1 within ``ROW_SUM_INPUT_TOL``; rows are renormalized
    to exact stochasticity internally.

    Raises RowSumError on bad row sums, DanglingLinkError when a non-exit
    link has no outgoing edges, UnknownLinkError on edges naming unknown
    links, and ParamError when an exit link carries outgoing edges.
    """
    link_map = {l.id: l for l in links}
    if OMEGA in link_map:
        raise ParamError(f"link id {OMEGA} is reserved for the supersink")
    out: dict[int, dict[int, float]] = {lid: {} for lid in link_map}
    for u, v in edges:
        if u not in link_map or v not in link_map:
            raise UnknownLinkError(u if u not in link_map else v)
        r = float(turning_ratios[(u, v)])
        if r < 0:
            raise ParamError(f"negative turning ratio on edge ({u}, {v})")
        out[u][v] = r

    ratios: dict[int, dict[int, float]] = {}
    for lid, link in link_map.items():
        row = out[lid]
        if link.kind == "exit":
            if row:
                raise ParamError(f"exit link {lid} must have no outgoing edges")
            ratios[lid] = {OMEGA: 1.0}
            continue
        if not row:
            raise DanglingLinkError(f"non-exit link {lid} has no outgoing edges")
        s = sum(row.values())
        if abs(s - 1.0) > ROW_SUM_INPUT_TOL:
            raise RowSumError(f"link {lid}: outgoing ratios sum to {s:.9f}, expected 1")
        ratios[lid] = {v: r / s for v, r in row.items()}
    ratios[OMEGA] = {OMEGA: 1.0}
    return ExtendedGraph(link_map, ratios)


def transition_matrix(graph: ExtendedGraph) -> TransitionMatrix:
    """Dense transition matrix of the extended graph in vertex order."""
    ids = graph.vertex_ids
    index = {lid: i for i, lid in enumerate(ids)}
    n = len(ids)
    P = np.zeros((n, n))
    for lid in ids:
        i = index[lid]
        for v, r in graph.successors(lid):
            P[i, index[v]] = r
    return TransitionMatrix(entries=P, vertex_ids=tuple(ids), index=index)


def downstream_set(graph: ExtendedGraph, link: int, hops: int) -> set[int]:
    """Vertices reachable from ``link`` by walks of exactly ``hops`` edges.

    The zero-hop set is {link}; every hop set from the supersink is the
    supersink itself.
    """
    if hops < 0:
        raise ParamError("hops must be >= 0")
    if link not in graph.vertex_ids and link != OMEGA:
        raise UnknownLinkError(link)
    frontier = {link}
    for _ in range(hops):
        nxt: set[int] = set()
        for u in frontier:
            for v, r in graph.successors(u):
                if r > 0.0:
                    nxt.add(v)
        frontier = nxt
    return frontier


def hop_distances(graph: ExtendedGraph, source: int) -> dict[int, int]:
    """Shortest walk length (in edges with positive ratio) from ``source``."""
    if source not in graph.vertex_ids:
        raise UnknownLinkError(source)
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v, r in graph.successors(u):
                if r > 0.0 and v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def toy_corridor_network() -> ExtendedGraph:
    """Small 8-link network used throughout the tests.

    Four approach links (0-3) merge into a corridor link 4 which splits
    0.7/0.3 onto links 5 and 6; both rejoin at exit link 7.  The split
    ratios are arbitrary.  Downstream sets from link 0 are {4}, {5,6}, {7}
    and then the supersink forever.
    """
    links = [Link(id=i, length=85.0, lanes=1, kind="internal") for i in range(7)]
    links.append(Link(id=7, length=85.0, lanes=1, kind="exit"))
    edges = {
        (0, 4): 1.0,
        (1, 4): 1.0,
        (2, 4): 1.0,
        (3, 4): 1.0,
        (4, 5): 0.7,
        (4, 6): 0.3,
        (5, 7): 1.0,
        (6, 7): 1.0,
    }
    return build_extended_graph(links, list(edges), edges)


# --- network config files -------------------------------------------------

def graph_to_config(graph: ExtendedGraph) -> dict:
    """Serializable dict of links and edges (supersink edges omitted)."""
    links = [
        {
            "id": l.id,
            "length_m": l.length,
            "lanes": l.lanes,
            "storage_capacity": l.storage_capacity,
            "saturation_flow": l.saturation_flow,
            "kind": l.kind,
        }
        for l in sorted(graph.links.values(), key=lambda l: l.id)
    ]
    edges = [
        {"from": u, "to": v, "ratio": r}
        for u in sorted(graph.links)
        for v, r in graph.successors(u)
        if v != OMEGA
    ]
    return {"links": links, "edges": edges}


def graph_from_config(cfg: Mapping) -> ExtendedGraph:
    """Build a graph from a config dict; unknown keys are ignored."""
    if "grid" in cfg:
        from .grid import build_grid_network

        g = cfg["grid"]
        net = build_grid_network(
            rows=int(g["rows"]),
            cols=int(g["cols"]),
            link_length=float(g.get("link_length_m", 85.0)),
            lanes=int(g.get("lanes", 2)),
        )
        return net.uniform_graph()
    links = [
        Link(
            id=int(d["id"]),
            length=float(d.get("length_m", 85.0)),
            lanes=int(d.get("lanes", 2)),
            storage_capacity=float(d.get("storage_capacity", 0.0)),
            saturation_flow=float(d.get("saturation_flow", 0.0)),
            kind=str(d.get("kind", "internal")),
        )
        for d in cfg["links"]
    ]
    edges = [(int(e["from"]), int(e["to"])) for e in cfg["edges"]]
    ratios = {(int(e["from"]), int(e["to"])): float(e["ratio"]) for e in cfg["edges"]}
    return build_extended_graph(links, edges, ratios)


def load_network_config(path) -> ExtendedGraph:
    with open(path) as fh:
        return graph_from_config(json.load(fh))


def save_network_config(graph: ExtendedGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_config(graph), fh, indent=1)
        fh.write("\n")
