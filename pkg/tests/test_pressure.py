import numpy as np
import pytest

from perimeter_pressure import (
    OMEGA,
    DimensionMismatchError,
    QueueDensityVector,
    UnknownLinkError,
    accumulative_importance,
    build_grid_network,
    hop_distances,
    multi_hop_pressure,
    multi_hop_pressure_profile,
    multi_hop_pressure_unrolled,
    perimeter_pressures,
    scalar_pressure_oracle,
    transition_matrix,
)
from conftest import random_density, random_graph

TOY_Q = np.array([0.5, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 0.9, 0.0])


def test_zero_hops_returns_density(toy_graph):
    P = transition_matrix(toy_graph)
    p = multi_hop_pressure(P, TOY_Q, 0)
    assert np.array_equal(p.values, TOY_Q)


def test_zero_density_gives_zero_pressure(toy_graph):
    P = transition_matrix(toy_graph)
    for h in (0, 1, 5, 17):
        assert np.all(multi_hop_pressure(P, np.zeros(9), h).values == 0.0)


def test_toy_three_hop_value_frozen(toy_graph):
    # hand-computed with the walk recursion: 0.5 - 0.4 - (0.7*0.6 + 0.3*0.8) - 0.9
    P = transition_matrix(toy_graph)
    p = multi_hop_pressure(P, TOY_Q, 3)
    assert p.value_of(0) == pytest.approx(-1.46, abs=1e-12)


def test_vectorized_matches_scalar_oracle_on_toy(toy_graph):
    rng = np.random.default_rng(3)
    P = transition_matrix(toy_graph)
    for _ in range(20):
        q = random_density(rng, toy_graph)
        p = multi_hop_pressure(P, q, 3)
        for lid in toy_graph.vertex_ids:
            assert p.value_of(lid) == pytest.approx(
                scalar_pressure_oracle(toy_graph, q, lid, 3), abs=1e-9
            )


def test_one_hop_is_vanilla_pressure():
    rng = np.random.default_rng(5)
    g = random_graph(rng, 10, n_exits=2)
    P = transition_matrix(g)
    q = random_density(rng, g)
    p = multi_hop_pressure(P, q, 1)
    assert np.array_equal(p.values, q - P.entries @ q)
    # scalar form: Q(l) - sum of ratio-weighted neighbour densities
    dens = {lid: q[i] for i, lid in enumerate(P.vertex_ids)}
    for lid in g.vertex_ids:
        expected = dens[lid] - sum(r * dens[v] for v, r in g.successors(lid))
        assert scalar_pressure_oracle(g, q, lid, 1) == pytest.approx(expected, abs=1e-12)


def test_supersink_pressure_is_zero(toy_graph):
    for h in (0, 1, 4, 9):
        assert scalar_pressure_oracle(toy_graph, TOY_Q, OMEGA, h) == 0.0
        P = transition_matrix(toy_graph)
        assert multi_hop_pressure(P, TOY_Q, h).value_of(OMEGA) == 0.0


def test_scalar_oracle_cross_check_many_draws():
    rng = np.random.default_rng(17)
    g = random_graph(rng, 10, n_exits=2)
    P = transition_matrix(g)
    for _ in range(100):
        q = random_density(rng, g)
        p = multi_hop_pressure(P, q, 4)
        for lid in (0, 4, 7):
            assert p.value_of(lid) == pytest.approx(
                scalar_pressure_oracle(g, q, lid, 4), abs=1e-9
            )


def test_monotone_decrease_and_bounds():
    rng = np.random.default_rng(23)
    for _ in range(100):
        g = random_graph(rng, int(rng.integers(3, 16)), n_exits=1)
        P = transition_matrix(g)
        q = random_density(rng, g)
        h = int(rng.integers(1, 21))
        prof = multi_hop_pressure_profile(P, q, h)
        assert np.all(prof[1:] <= prof[:-1] + 1e-12)
        for k in range(h + 1):
            assert np.all(prof[k] >= -k - 1e-9)
            assert np.all(prof[k] <= 1.0 + 1e-12)


def test_recursive_and_unrolled_agree():
    rng = np.random.default_rng(29)
    g = random_graph(rng, 12, n_exits=2)
    P = transition_matrix(g)
    q = random_density(rng, g)
    for h in (0, 1, 7, 30):
        a = multi_hop_pressure(P, q, h).values
        b = multi_hop_pressure_unrolled(P, q, h).values
        assert np.allclose(a, b, atol=1e-12)


def test_dimension_mismatch_rejected(toy_graph):
    P = transition_matrix(toy_graph)
    with pytest.raises(DimensionMismatchError):
        multi_hop_pressure(P, np.zeros(4), 2)
    with pytest.raises(DimensionMismatchError):
        scalar_pressure_oracle(toy_graph, np.zeros(4), 0, 2)


def test_queue_density_validation(toy_graph):
    ids = tuple(toy_graph.vertex_ids)
    QueueDensityVector(values=np.zeros(9), vertex_ids=ids)
    with pytest.raises(Exception):
        QueueDensityVector(values=np.full(9, 1.5), vertex_ids=ids)
    bad = np.zeros(9)
    bad[-1] = 0.2  # supersink density must stay zero
    with pytest.raises(Exception):
        QueueDensityVector(values=bad, vertex_ids=ids)


def test_perimeter_extraction_roundtrip():
    net = build_grid_network(6, 6)
    g = net.uniform_graph()
    P = transition_matrix(g)
    rng = np.random.default_rng(31)
    q = random_density(rng, g)
    p = multi_hop_pressure(P, q, 8)
    pf = perimeter_pressures(p, net.feeder_ids)
    assert len(pf.values) == 24
    for k, f in enumerate(net.feeder_ids):
        assert pf.values[k] == p.value_of(f)


def test_perimeter_extraction_single_and_unknown(toy_graph):
    P = transition_matrix(toy_graph)
    p = multi_hop_pressure(P, TOY_Q, 2)
    pf = perimeter_pressures(p, [3])
    assert pf.values.shape == (1,) and pf.values[0] == p.value_of(3)
    with pytest.raises(UnknownLinkError):
        perimeter_pressures(p, [42])


def test_importance_single_power_is_matrix_row(toy_graph):
    P = transition_matrix(toy_graph)
    imp = accumulative_importance(P, 0, 1)
    row = P.row_of(0)
    for i, lid in enumerate(P.vertex_ids):
        if lid != OMEGA:
            assert imp[lid] == row[i]


def test_importance_toy_frozen_values(toy_graph):
    # walks from link 0: hop1 -> {4}, hop2 -> {5:.7, 6:.3}, hop3 -> {7:1}, hop4 -> supersink
    P = transition_matrix(toy_graph)
    imp = accumulative_importance(P, 0, 4)
    assert imp[4] == pytest.approx(1.0, abs=1e-12)
    assert imp[5] == pytest.approx(0.7, abs=1e-12)
    assert imp[6] == pytest.approx(0.3, abs=1e-12)
    assert imp[7] == pytest.approx(1.0, abs=1e-12)
    assert imp[1] == 0.0


def test_importance_decays_over_grid_distance():
    net = build_grid_network(6, 6)
    g = net.uniform_graph()
    P = transition_matrix(g)
    imp = accumulative_importance(P, 5, 20)
    dist = hop_distances(g, 5)
    means = []
    for d in range(1, 11):
        ring = [imp[l] for l, dd in dist.items() if dd == d and l != OMEGA]
        assert ring
        means.append(np.mean(ring))
    assert all(means[i + 1] <= means[i] + 1e-12 for i in range(len(means) - 1))
