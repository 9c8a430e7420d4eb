"""Checks of the analysis helpers: histograms, fits, grids, sweeps."""

import numpy as np
import pytest

from beaconcast.errors import (
    EmptyDataError,
    InsufficientDataError,
    InvalidParameterError,
)
from beaconcast.link import LinkParams
from beaconcast.model import (
    ProtocolParams,
    StateShares,
    WindowSpec,
    steady_state_shares,
)
from beaconcast.sim import RECEPTION_DTYPE, SimConfig, SimMetrics, run
from beaconcast.stats import (
    Histogram,
    collision_cdf_grid,
    interarrival_fit,
    networking_tradeoff,
    run_sweep,
    summarize_run,
    sweep_configs,
    throughput_pdf,
    throughput_vs_distance,
)

BALANCED = StateShares(0.5, 0.5, 0.0)


def balanced_run(transitions, seed=0, **kwargs):
    return run(SimConfig.from_shares(BALANCED,
                                     transitions_per_node=transitions,
                                     seed=seed, **kwargs))


def synthetic_metrics(gaps=(), receptions=None, duration_ms=10_000,
                      n_nodes=1):
    if receptions is None:
        receptions = np.empty(0, dtype=RECEPTION_DTYPE)
    return SimMetrics(
        receptions=receptions, collisions_observed=0,
        tx_count=0, rx_count=int(receptions.size),
        network_event_count=0, broadcast_event_count=0, scan_event_count=0,
        losses={}, per_window_throughput=[],
        interarrival_ms=[np.asarray(gaps, dtype=np.int64)],
        state_time_ms=np.zeros(3, dtype=np.int64),
        channel_beacons=np.zeros(13, dtype=np.int64),
        duration_ms=duration_ms, n_nodes=n_nodes, t_w=1000.0)


def test_histogram_rejects_bad_shapes():
    with pytest.raises(InvalidParameterError):
        Histogram(bin_edges=[0.0, 1.0, 1.0], counts=[1, 2])
    with pytest.raises(InvalidParameterError):
        Histogram(bin_edges=[0.0, 1.0, 2.0], counts=[1])
    with pytest.raises(InvalidParameterError):
        Histogram(bin_edges=[0.0, 1.0], counts=[-1])
    with pytest.raises(InvalidParameterError):
        Histogram(bin_edges=[0.0, 1.0], counts=[1], normalization="prob")


def test_histogram_normalizations():
    h = Histogram(bin_edges=[0.0, 1.0, 3.0], counts=[6, 4])
    assert np.array_equal(h.values, [6.0, 4.0])
    pdf = Histogram(bin_edges=[0.0, 1.0, 3.0], counts=[6, 4],
                    normalization="pdf")
    assert float((pdf.values * np.diff(pdf.bin_edges)).sum()) == \
        pytest.approx(1.0, abs=1e-9)


def test_throughput_pdf_integrates_to_one():
    h = throughput_pdf(balanced_run(5_000))
    assert h.normalization == "pdf"
    integral = float((h.values * np.diff(h.bin_edges)).sum())
    assert integral == pytest.approx(1.0, abs=1e-9)
    # integer-centered unit bins
    assert h.bin_edges[0] == -0.5
    assert np.allclose(np.diff(h.bin_edges), 1.0)


def test_throughput_pdf_honors_window_override():
    m = balanced_run(5_000)
    full = throughput_pdf(m)
    halved = throughput_pdf(m, WindowSpec(t_w=500.0))
    assert halved.counts.sum() >= 2 * (full.counts.sum() - m.n_nodes)


def test_throughput_pdf_needs_enough_windows():
    with pytest.raises(InsufficientDataError):
        throughput_pdf(balanced_run(100))
    with pytest.raises(EmptyDataError):
        throughput_pdf(balanced_run(5))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_interarrival_fit_recovers_exponential_rate(seed):
    rng = np.random.default_rng(seed)
    gaps = rng.exponential(scale=200.0, size=20_000)
    fit = interarrival_fit(synthetic_metrics(gaps=gaps.round()))
    assert fit.lambda_hat == pytest.approx(0.005, abs=2e-4)
    assert fit.ks_statistic < 1.63 / np.sqrt(gaps.size)


def test_interarrival_fit_flags_non_exponential_gaps():
    fit = interarrival_fit(synthetic_metrics(gaps=[120] * 500))
    assert fit.lambda_hat == pytest.approx(1 / 120, abs=1e-9)
    assert fit.ks_statistic > 0.3


def test_interarrival_fit_needs_enough_gaps():
    with pytest.raises(InsufficientDataError):
        interarrival_fit(synthetic_metrics(gaps=[10] * 99))


def test_collision_grid_edges_and_accuracy():
    grid = collision_cdf_grid([1, 2, 10], [0.0, 0.5, 1.0], ProtocolParams(),
                              sim_budget=200_000, seed=3)
    assert np.all(grid.analytic[0] == 0)    # a lone node cannot collide
    assert np.all(grid.simulated[0] == 0)
    assert np.all(grid.analytic[:, 0] == 0)  # never broadcasting, never hit
    assert np.all(grid.simulated[:, 0] == 0)
    assert np.abs(grid.analytic - grid.simulated).max() < 0.02
    assert np.all(np.diff(grid.analytic, axis=0) >= 0)  # more nodes, more
    assert np.all(np.diff(grid.analytic, axis=1) >= 0)  # more airtime, more


def test_collision_grid_rejects_bad_axes():
    p = ProtocolParams()
    with pytest.raises(InvalidParameterError):
        collision_cdf_grid([], [0.5], p, 1000)
    with pytest.raises(InvalidParameterError):
        collision_cdf_grid([0], [0.5], p, 1000)
    with pytest.raises(InvalidParameterError):
        collision_cdf_grid([2], [1.5], p, 1000)


def test_sweep_configs_keep_time_shares_on_duration_axes():
    base = SimConfig.from_shares(BALANCED, transitions_per_node=1_000)
    target = np.array(BALANCED.as_tuple())
    for axis, values in (("t_s", [40.0, 60.0, 90.0]),
                         ("t_b", [26.0, 30.0, 39.0])):
        for value, cfg in zip(values, sweep_configs(base, axis, values)):
            assert getattr(cfg.protocol, axis) == value
            got = steady_state_shares(cfg.selection, cfg.protocol)
            assert np.allclose(got.as_tuple(), target, atol=1e-9)


def test_sweep_configs_networking_axis_rescales_the_rest():
    base = SimConfig.from_shares(StateShares(0.6, 0.4, 0.0),
                                 transitions_per_node=1_000)
    for p_n, cfg in zip([0.0, 0.5], sweep_configs(base, "p_n", [0.0, 0.5])):
        got = steady_state_shares(cfg.selection, cfg.protocol)
        assert got.p_n == pytest.approx(p_n, abs=1e-9)
        assert got.p_b / got.p_s == pytest.approx(1.5, abs=1e-9)


def test_sweep_configs_remaining_axes():
    base = SimConfig.from_shares(BALANCED, transitions_per_node=1_000)
    for n, cfg in zip([2, 6], sweep_configs(base, "n_nodes", [2, 6])):
        assert cfg.n_nodes == n
    with pytest.raises(InvalidParameterError):
        sweep_configs(base, "distance", [100.0])  # needs a link model
    with pytest.raises(InvalidParameterError):
        sweep_configs(base, "t_x", [1.0])
    with pytest.raises(InvalidParameterError):
        sweep_configs(base, "t_s", [])


def test_sweep_configs_distance_places_two_nodes():
    positions = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]])
    base = SimConfig.from_shares(BALANCED, transitions_per_node=1_000,
                                 positions=positions, link=LinkParams())
    cfgs = sweep_configs(base, "distance", [100.0, 900.0])
    for d, cfg in zip([100.0, 900.0], cfgs):
        assert cfg.n_nodes == 2
        assert np.allclose(cfg.positions[1] - cfg.positions[0], [d, 0.0, 0.0])


def test_run_sweep_scan_duration_spreads_the_window_counts():
    base = SimConfig.from_shares(BALANCED, transitions_per_node=5_000, seed=7)
    result = run_sweep(base, "t_s", [40.0, 90.0])
    assert result.parameter == "t_s"
    assert len(result.summaries) == 2
    assert result.summaries[1].variance > result.summaries[0].variance


def test_networking_tradeoff_orders_throughput():
    configs = [SimConfig.from_shares(StateShares((1 - pn) / 2, (1 - pn) / 2,
                                                 pn),
                                     transitions_per_node=5_000, seed=9)
               for pn in (0.0, 0.3, 0.6)]
    result = networking_tradeoff(configs)
    thr = [s.mean_throughput for s in result.summaries]
    net = [s.networking_rate for s in result.summaries]
    zero = [s.p_zero_window for s in result.summaries]
    assert thr[0] > thr[1] > thr[2]
    assert net[0] < net[1] < net[2]
    assert zero[0] <= zero[1] <= zero[2]
    assert result.values == pytest.approx((0.0, 0.3, 0.6), abs=1e-9)


def test_networking_tradeoff_rejects_other_differences():
    a = SimConfig.from_shares(BALANCED, transitions_per_node=1_000, seed=1)
    b = SimConfig.from_shares(StateShares(0.3, 0.3, 0.4),
                              transitions_per_node=1_000, seed=2)
    with pytest.raises(InvalidParameterError):
        networking_tradeoff([a, b])


def test_summarize_run_needs_complete_windows():
    with pytest.raises(EmptyDataError):
        summarize_run(balanced_run(5))


def test_summarize_run_fields():
    s = summarize_run(balanced_run(5_000))
    assert s.networking_rate == 0.0
    assert 0.0 <= s.p_zero_window <= 1.0
    assert s.mean_throughput > 0
    assert s.variance > 0


def test_throughput_vs_distance_table():
    rec = np.zeros(2, dtype=RECEPTION_DTYPE)
    rec["rssi_dbm"] = [-50.0, -60.0]
    rec["time_ms"] = [100, 200]
    near = synthetic_metrics(receptions=rec, duration_ms=1000)
    far = synthetic_metrics(duration_ms=1000)
    table = throughput_vs_distance([(100.0, near), (1600.0, far)])
    assert table[0] == (100.0, pytest.approx(2.0), pytest.approx(-55.0))
    assert table[1][0] == 1600.0
    assert table[1][1] == 0.0
    assert np.isnan(table[1][2])
