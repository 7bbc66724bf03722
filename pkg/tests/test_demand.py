import numpy as np
import pytest

from perimeter_pressure import (
    EmptyGroupError,
    ParamError,
    build_grid_network,
    build_profile,
    interval_weights,
    sample_trips,
)
from perimeter_pressure.demand import OD_STREAMS


def test_peaked_weights_for_r2():
    w = interval_weights(2.0, 9)
    assert list(w) == [1, 2, 4, 8, 16, 8, 4, 2, 1]
    # 2*(1+2+4+8) + 16; the peak interval carries 16/46 of the volume
    assert w.sum() == 46
    assert (w / w.sum()).max() == pytest.approx(16 / 46)


def test_symmetric_profile_when_no_shift():
    p = build_profile(6000, 11000, tau=0.0, alpha_upper=0.5, horizon=14400)
    up = p.stream_intervals[("upper-feeders", "upper-subregion")]
    low = p.stream_intervals[("lower-feeders", "lower-subregion")]
    assert up == low
    ui = p.stream_intervals[("upper-subregion", "upper-subregion")]
    li = p.stream_intervals[("lower-subregion", "lower-subregion")]
    assert ui == li


def test_totals_integrate_to_demand():
    p = build_profile(6000, 11000, tau=2700, alpha_upper=0.5, horizon=14400)
    external = p.stream_total(("upper-feeders", "upper-subregion")) + p.stream_total(
        ("lower-feeders", "lower-subregion")
    )
    internal = sum(
        p.stream_total(od) for od in OD_STREAMS if od[0].endswith("subregion")
    )
    assert external == pytest.approx(6000, abs=1e-9)
    assert internal == pytest.approx(11000, abs=1e-9)
    assert p.truncated_veh == 0.0


def test_shift_property_on_grid():
    tau = 2700.0
    p = build_profile(6000, 11000, tau=tau, alpha_upper=0.65, horizon=14400)
    for t in np.arange(0, 9 * 900, 450.0):
        up = p.rate(("upper-feeders", "upper-subregion"), t)
        low = p.rate(("lower-feeders", "lower-subregion"), t + tau)
        assert low == pytest.approx(up, abs=1e-15)


def test_imbalance_ratio_property_on_grid():
    tau, alpha = 1800.0, 0.7
    p = build_profile(6000, 11000, tau=tau, alpha_upper=alpha, horizon=14400)
    for t in np.arange(0, 9 * 900, 300.0):
        upper = sum(p.rate(od, t) for od in OD_STREAMS if od[0] == "upper-subregion")
        lower = sum(p.rate(od, t + tau) for od in OD_STREAMS if od[0] == "lower-subregion")
        assert lower * alpha == pytest.approx(upper * (1 - alpha), abs=1e-12)


def test_alpha_splits_internal_volume():
    p = build_profile(6000, 11000, tau=0.0, alpha_upper=0.7, horizon=14400)
    upper = sum(p.stream_total(od) for od in OD_STREAMS if od[0] == "upper-subregion")
    lower = sum(p.stream_total(od) for od in OD_STREAMS if od[0] == "lower-subregion")
    assert upper == pytest.approx(0.7 * 11000)
    assert lower == pytest.approx(0.3 * 11000)


def test_truncation_is_logged():
    p = build_profile(6000, 11000, tau=3600, alpha_upper=0.5, horizon=9000)
    assert p.truncated_veh > 0
    kept = sum(p.stream_total(od) for od in OD_STREAMS)
    assert kept + p.truncated_veh == pytest.approx(17000, abs=1e-9)


def test_param_validation():
    with pytest.raises(ParamError):
        build_profile(6000, 11000, tau=0.0, alpha_upper=1.0, horizon=14400)
    with pytest.raises(ParamError):
        build_profile(6000, 11000, tau=20000.0, alpha_upper=0.5, horizon=14400)
    with pytest.raises(ParamError):
        build_profile(6000, 11000, tau=0.0, alpha_upper=0.5, horizon=14400, r=0.0)
    with pytest.raises(ParamError):
        build_profile(6000, 11000, tau=0.0, alpha_upper=0.5, horizon=14400, locality=1.5)


def test_future_volume_window():
    p = build_profile(4500, 0.0001, tau=0.0, alpha_upper=0.5, horizon=14400)
    # first interval holds share 1/46 of each stream
    assert p.volume_between(0, 900) == pytest.approx(4500 / 46 + 0.0001 / 46, rel=1e-9)


@pytest.fixture(scope="module")
def grid():
    return build_grid_network(4, 4)


def test_zero_rate_profile_gives_empty_list(grid):
    p = build_profile(0.0, 0.0, tau=0.0, alpha_upper=0.5, horizon=14400)
    trips = sample_trips(p, grid, rng_seed=1)
    assert len(trips) == 0


def test_sampling_deterministic(grid):
    p = build_profile(6000, 11000, tau=2700, alpha_upper=0.6, horizon=14400)
    a = sample_trips(p, grid, rng_seed=42)
    b = sample_trips(p, grid, rng_seed=42)
    assert a.to_csv() == b.to_csv()
    c = sample_trips(p, grid, rng_seed=43)
    assert a.to_csv() != c.to_csv()


def test_sampled_totals_close_to_demand(grid):
    p = build_profile(6000, 11000, tau=2700, alpha_upper=0.5, horizon=14400)
    trips = sample_trips(p, grid, rng_seed=9)
    feeders = set(grid.feeder_ids)
    n_ext = int(np.isin(trips.origin, list(feeders)).sum())
    n_int = len(trips) - n_ext
    assert abs(n_ext - 6000) <= 9
    assert abs(n_int - 11000) <= 9


def test_trips_sorted_and_endpoint_kinds(grid):
    p = build_profile(6000, 11000, tau=900, alpha_upper=0.7, horizon=14400)
    trips = sample_trips(p, grid, rng_seed=5)
    assert np.all(np.diff(trips.t_depart) >= 0)
    kinds = {lid: l.kind for lid, l in grid.links.items()}
    for o, d in zip(trips.origin, trips.dest):
        assert kinds[o] in ("feeder", "source-connector")
        assert kinds[d] == "exit"  # never a feeder, never outside


def test_external_trips_stay_in_matching_subregion(grid):
    p = build_profile(6000, 0.0001, tau=0.0, alpha_upper=0.5, horizon=14400)
    trips = sample_trips(p, grid, rng_seed=5)
    upper_sinks = set(grid.upper_sinks)
    for o, d in zip(trips.origin, trips.dest):
        if o in set(grid.upper_feeders):
            assert d in upper_sinks
        elif o in set(grid.lower_feeders):
            assert d not in upper_sinks


def test_empty_group_raises():
    net = build_grid_network(4, 4)
    net.upper_sources = []
    p = build_profile(10, 1000, tau=0.0, alpha_upper=0.5, horizon=14400)
    with pytest.raises(EmptyGroupError):
        sample_trips(p, net, rng_seed=1)
