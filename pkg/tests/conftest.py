import numpy as np
import pytest

from perimeter_pressure import Link, build_extended_graph, toy_corridor_network


@pytest.fixture(scope="session")
def toy_graph():
    return toy_corridor_network()


def random_graph(rng, n_links, n_exits=1, max_out=3, acyclic=False):
    """Random row-stochastic link graph with absorbing exits.

    acyclic=True wires edges only toward higher ids so every walk reaches an
    exit; otherwise targets are arbitrary non-exit-safe choices.
    """
    exits = set(range(n_links - n_exits, n_links))
    links = [
        Link(id=i, length=50.0, lanes=1, kind="exit" if i in exits else "internal")
        for i in range(n_links)
    ]
    edges = []
    ratios = {}
    for i in range(n_links):
        if i in exits:
            continue
        if acyclic:
            pool = np.arange(i + 1, n_links)
        else:
            pool = np.array([j for j in range(n_links) if j != i])
        k = int(rng.integers(1, min(max_out, len(pool)) + 1))
        targets = rng.choice(pool, size=k, replace=False)
        w = rng.random(k) + 0.05
        w = w / w.sum()
        for t, r in zip(targets, w):
            edges.append((i, int(t)))
            ratios[(i, int(t))] = float(r)
    return build_extended_graph(links, edges, ratios)


def random_density(rng, graph):
    q = rng.random(graph.n_vertices)
    q[-1] = 0.0
    return q


@pytest.fixture
def graph_factory():
    return random_graph


@pytest.fixture
def density_factory():
    return random_density
