"""Signalized grid network builder.

The grid has rows x cols signalized intersections.  Adjacent intersections
are joined by two directed roadways (one per direction), each made of two
links in series that meet at a mid-block junction, so crossing a block takes
two hops.  Every boundary intersection has one gated feeder link per outward
side, giving 2*(rows+cols) feeders.  Each block carries a single-lane source
ramp and a single-lane sink ramp at the mid-block junction of its
forward roadway; these are the trip origins and destinations inside the
protected region.  Channelization permits through, left and right movements
from every approach; U-turns exist only at the four corner intersections,
which would otherwise cut connectivity on small grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParamError
from .network_graph import ExtendedGraph, Link, build_extended_graph
from .signals import SignalPlan, default_two_ring_plan, green_mask

# travel directions as (drow, dcol); row 0 is the north edge
NORTH = (-1, 0)
SOUTH = (1, 0)
EAST = (0, 1)
WEST = (0, -1)


def _right_of(d):
    return (d[1], -d[0])


def _left_of(d):
    return (-d[1], d[0])


@dataclass(frozen=True)
class Movement:
    """One permitted link-to-link transfer; ``to`` is None for trip absorption."""

    from_id: int
    to_id: Optional[int]
    kind: str  # "turn" | "midblock" | "merge" | "exit"
    intersection: Optional[int] = None
    axis: Optional[str] = None  # "ns" | "ew" for intersection movements
    turn: Optional[str] = None  # "left" | "through" | "right"


@dataclass
class GridNetwork:
    """Built grid with links, movements, signal plan and demand groups."""

    rows: int
    cols: int
    link_length: float
    lanes: int
    free_speed: float
    links: dict[int, Link] = field(default_factory=dict)
    geometry: dict[int, tuple[float, float, float, float]] = field(default_factory=dict)
    movements: list[Movement] = field(default_factory=list)
    feeder_ids: list[int] = field(default_factory=list)
    upper_feeders: list[int] = field(default_factory=list)
    lower_feeders: list[int] = field(default_factory=list)
    upper_sources: list[int] = field(default_factory=list)
    lower_sources: list[int] = field(default_factory=list)
    upper_sinks: list[int] = field(default_factory=list)
    lower_sinks: list[int] = field(default_factory=list)
    signal_plan: SignalPlan = None

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_intersections(self) -> int:
        return self.rows * self.cols

    def groups(self) -> dict[str, list[int]]:
        return {
            "upper-feeders": list(self.upper_feeders),
            "lower-feeders": list(self.lower_feeders),
            "upper-subregion": list(self.upper_sources),
            "lower-subregion": list(self.lower_sources),
        }

    def destination_groups(self) -> dict[str, list[int]]:
        return {
            "upper-subregion": list(self.upper_sinks),
            "lower-subregion": list(self.lower_sinks),
            "region": list(self.upper_sinks) + list(self.lower_sinks),
        }

    def movement_pairs(self) -> list[tuple[int, Optional[int]]]:
        return [(m.from_id, m.to_id) for m in self.movements]

    def free_flow_ticks(self, link_id: int) -> int:
        return max(1, round(self.links[link_id].length / self.free_speed))

    def green_matrix(self) -> np.ndarray:
        """Per-second green mask for every movement over one signal cycle."""
        pairs = [(m.from_id, m.to_id) for m in self.movements if m.to_id is not None]
        always = {
            (m.from_id, m.to_id)
            for m in self.movements
            if m.to_id is not None and m.kind != "turn"
        }
        mask = green_mask(self.signal_plan, pairs, always)
        # re-expand to all movements; absorption rows are always green
        full = np.ones((len(self.movements), self.signal_plan.cycle), dtype=np.uint8)
        j = 0
        for i, m in enumerate(self.movements):
            if m.to_id is not None:
                full[i] = mask[j]
                j += 1
        return full

    def ratios_from_movements(self, flows: Optional[dict] = None) -> dict:
        """Turning-ratio map from movement flows; uniform where a link saw none."""
        out: dict[int, list[Movement]] = {}
        for m in self.movements:
            if m.to_id is not None:
                out.setdefault(m.from_id, []).append(m)
        ratios: dict[tuple[int, int], float] = {}
        for lid, movs in out.items():
            total = 0.0
            if flows:
                total = sum(flows.get((m.from_id, m.to_id), 0.0) for m in movs)
            if total > 0.0:
                for m in movs:
                    ratios[(m.from_id, m.to_id)] = flows.get((m.from_id, m.to_id), 0.0) / total
            else:
                for m in movs:
                    ratios[(m.from_id, m.to_id)] = 1.0 / len(movs)
        return ratios

    def graph_with_ratios(self, ratios: dict) -> ExtendedGraph:
        edges = sorted(ratios)
        return build_extended_graph(self.links.values(), edges, ratios)

    def uniform_graph(self) -> ExtendedGraph:
        return self.graph_with_ratios(self.ratios_from_movements())


def build_grid_network(
    rows: int,
    cols: int,
    link_length: float = 85.0,
    lanes: int = 2,
    free_speed: float = 50.0 / 3.6,
) -> GridNetwork:
    """Construct the signalized grid.

    rows, cols >= 2.  Feeder links take ids 0..2*(rows+cols)-1, ordered north
    side (west to east), south side, west side (north to south), east side.
    """
    if rows < 2 or cols < 2:
        raise ParamError("grid needs rows >= 2 and cols >= 2")

    net = GridNetwork(rows=rows, cols=cols, link_length=link_length, lanes=lanes,
                      free_speed=free_speed)
    B = 2.0 * link_length  # block length
    mid_row = (rows - 1) / 2.0

    def xy(r, c):
        return c * B, (rows - 1 - r) * B

    next_id = 0

    def add_link(kind, lanes_, p0, p1):
        nonlocal next_id
        link = Link(id=next_id, length=link_length, lanes=lanes_, kind=kind)
        net.links[link.id] = link
        net.geometry[link.id] = (p0[0], p0[1], p1[0], p1[1])
        next_id += 1
        return link.id

    # --- feeders ------------------------------------------------------------
    # (intersection row, col, travel direction, entry point offset)
    feeder_specs = []
    for c in range(cols):
        feeder_specs.append((0, c, SOUTH))
    for c in range(cols):
        feeder_specs.append((rows - 1, c, NORTH))
    for r in range(rows):
        feeder_specs.append((r, 0, EAST))
    for r in range(rows):
        feeder_specs.append((r, cols - 1, WEST))

    feeder_dir: dict[int, tuple[int, int]] = {}
    feeder_node: dict[int, int] = {}
    for r, c, d in feeder_specs:
        x1, y1 = xy(r, c)
        x0, y0 = x1 + d[1] * -link_length, y1 - d[0] * -link_length
        fid = add_link("feeder", lanes, (x0, y0), (x1, y1))
        feeder_dir[fid] = d
        feeder_node[fid] = r * cols + c
        net.feeder_ids.append(fid)
        if d == SOUTH:
            net.upper_feeders.append(fid)
        elif d == NORTH:
            net.lower_feeders.append(fid)
        elif r < mid_row or (r == mid_row and d == EAST):
            net.upper_feeders.append(fid)
        else:
            net.lower_feeders.append(fid)

    # --- internal roadways ----------------------------------------------------
    # blocks in deterministic order: all horizontal, then all vertical
    blocks = []
    for r in range(rows):
        for c in range(cols - 1):
            blocks.append(((r, c), (r, c + 1)))
    for r in range(rows - 1):
        for c in range(cols):
            blocks.append(((r, c), (r + 1, c)))

    # half-links per directed roadway: (node_from, node_to) -> (half1, half2)
    halves: dict[tuple[int, int], tuple[int, int]] = {}
    for (ra, ca), (rb, cb) in blocks:
        a, b = ra * cols + ca, rb * cols + cb
        pa, pb = xy(ra, ca), xy(rb, cb)
        mid = ((pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0)
        for u, v, p0, p1 in ((a, b, pa, pb), (b, a, pb, pa)):
            m = ((p0[0] + p1[0]) / 2.0, (p0[1] + p1[1]) / 2.0)
            h1 = add_link("internal", lanes, p0, m)
            h2 = add_link("internal", lanes, m, p1)
            halves[(u, v)] = (h1, h2)

    # --- ramps ------------------------------------------------------------
    # one source + one sink per block, on the forward (a->b) roadway's mid-block
    for bi, ((ra, ca), (rb, cb)) in enumerate(blocks):
        a, b = ra * cols + ca, rb * cols + cb
        h1, h2 = halves[(a, b)]
        gx0, gy0, gx1, gy1 = net.geometry[h1]
        m = (gx1, gy1)
        src = add_link("source-connector", 1, (m[0] - 20.0, m[1] - 20.0), m)
        snk = add_link("exit", 1, m, (m[0] + 20.0, m[1] - 20.0))
        block_row = (ra + rb) / 2.0
        upper = block_row < mid_row or (block_row == mid_row and (ca + ra) % 2 == 0)
        if upper:
            net.upper_sources.append(src)
            net.upper_sinks.append(snk)
        else:
            net.lower_sources.append(src)
            net.lower_sinks.append(snk)
        net.movements.append(Movement(h1, snk, "midblock"))
        net.movements.append(Movement(src, h2, "merge"))
        net.movements.append(Movement(snk, None, "exit"))

    # mid-block continuations for every directed roadway
    for (u, v), (h1, h2) in halves.items():
        net.movements.append(Movement(h1, h2, "midblock"))

    # --- intersection turns ------------------------------------------------
    # incoming: feeders plus second halves; outgoing: first halves
    incoming: dict[int, list[tuple[int, tuple[int, int]]]] = {}
    outgoing: dict[int, list[tuple[int, tuple[int, int]]]] = {}
    for fid, d in feeder_dir.items():
        incoming.setdefault(feeder_node[fid], []).append((fid, d))
    for (u, v), (h1, h2) in halves.items():
        ru, cu = divmod(u, cols)
        rv, cv = divmod(v, cols)
        d = (rv - ru, cv - cu)
        incoming.setdefault(v, []).append((h2, d))
        outgoing.setdefault(u, []).append((h1, d))

    for node in sorted(incoming):
        r, c = divmod(node, cols)
        corner = r in (0, rows - 1) and c in (0, cols - 1)
        for in_link, d_in in sorted(incoming[node]):
            axis = "ns" if d_in[0] != 0 else "ew"
            for out_link, d_out in sorted(outgoing.get(node, [])):
                if d_out == (-d_in[0], -d_in[1]):
                    # U-turns only at the four corners, where the two-exit
                    # layout would otherwise cut connectivity; they share the
                    # protected-left phase
                    if not corner:
                        continue
                    turn = "left"
                elif d_out == d_in:
                    turn = "through"
                elif d_out == _right_of(d_in):
                    turn = "right"
                else:
                    turn = "left"
                net.movements.append(
                    Movement(in_link, out_link, "turn", intersection=node, axis=axis, turn=turn)
                )

    net.movements.sort(key=lambda m: (m.from_id, -1 if m.to_id is None else m.to_id))

    ns_left, ns_tr, ew_left, ew_tr = [], [], [], []
    for m in net.movements:
        if m.kind != "turn":
            continue
        pair = (m.from_id, m.to_id)
        if m.axis == "ns":
            (ns_left if m.turn == "left" else ns_tr).append(pair)
        else:
            (ew_left if m.turn == "left" else ew_tr).append(pair)
    net.signal_plan = default_two_ring_plan(ns_left, ns_tr, ew_left, ew_tr)
    return net
