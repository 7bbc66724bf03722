"""Dirichlet perturbation of turning ratios for robustness experiments.

For each link with outgoing ratio vector T_i the perturbed vector is drawn
from Dir(M*(1-alpha)*T_i + M*alpha*1): alpha=0 keeps the original ratios as
the mean (still a nonzero-variance draw), alpha=1 centres the draw on equal
ratios.  M is the inverse temperature controlling the variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParamError
from .network_graph import ExtendedGraph, build_extended_graph

CONCENTRATION_FLOOR = 1e-6  # Gamma(0) is degenerate; keep near-zero mass near zero


@dataclass(frozen=True)
class PerturbationSpec:
    alpha: float
    m: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ParamError("perturbation alpha must lie in [0, 1]")
        if self.m <= 0:
            raise ParamError("inverse temperature M must be positive")


def sample_simplex(ratios: np.ndarray, spec: PerturbationSpec, rng) -> np.ndarray:
    """One Dirichlet draw via independent Gamma variates normalized by their sum."""
    conc = spec.m * (1.0 - spec.alpha) * ratios + spec.m * spec.alpha
    conc = np.maximum(conc, CONCENTRATION_FLOOR)
    g = rng.gamma(shape=conc, scale=1.0)
    return g / g.sum()


def perturb_turning_ratios(graph: ExtendedGraph, spec: PerturbationSpec) -> ExtendedGraph:
    """New graph with independently perturbed ratios on every multi-way link.

    Links with a single outgoing edge keep ratio 1; exit links and the
    supersink are untouched.  The draw order follows vertex order, so a seed
    pins the whole assignment.
    """
    rng = np.random.default_rng(spec.seed)
    links = graph.links
    edges = []
    ratios = {}
    for lid in sorted(links):
        if links[lid].kind == "exit":
            continue
        succ = graph.successors(lid)
        targets = [v for v, _ in succ]
        orig = np.array([r for _, r in succ])
        if len(targets) == 1:
            new = np.array([1.0])
        else:
            new = sample_simplex(orig, spec, rng)
        for v, r in zip(targets, new):
            edges.append((lid, v))
            ratios[(lid, v)] = float(r)
    return build_extended_graph(links.values(), edges, ratios)
