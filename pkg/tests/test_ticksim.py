"""Checks of the per-tick reference engine and its event mechanics."""

import numpy as np
import pytest
from scipy import stats as sps

from beaconcast.model import SelectionProbs, State, StateShares
from beaconcast.sim import Imperfections, SimConfig, node_rng, shadow_rng
from beaconcast.ticksim import NodeState, TickEngine, _begin_event, step

ALWAYS_BROADCAST = SelectionProbs(1.0, 0.0, 0.0)
ALWAYS_NETWORK = SelectionProbs(0.0, 0.0, 1.0)


def assert_same_receptions(a, b):
    for name in ("time_ms", "receiver", "sender", "channel"):
        assert np.array_equal(a[name], b[name])
    assert np.allclose(a["rssi_dbm"], b["rssi_dbm"], equal_nan=True)


def test_sequential_schedule_is_the_hardware_order():
    config = SimConfig(selection=ALWAYS_BROADCAST, beacon_phase="sequential",
                       transitions_per_node=10)
    node = NodeState()
    _begin_event(config, node, 0, node_rng(0, 0))
    expected = [((c * 30) // 13, c + 1) for c in range(13)]
    assert node.beacon_schedule == expected
    assert node.state_length == 30
    assert node.broadcast_channel_cursor == 1


def test_cyclic_shift_is_uniform_over_the_event():
    config = SimConfig(selection=ALWAYS_BROADCAST, transitions_per_node=10)
    rng = node_rng(123, 0)
    shifts = []
    for _ in range(3000):
        node = NodeState()
        _begin_event(config, node, 0, rng)
        # channel 1 sits at offset 0 unshifted, so its offset is the shift
        shifts.append(next(o for o, c in node.beacon_schedule if c == 1))
    counts = np.bincount(shifts, minlength=30)
    assert counts.size == 30
    assert sps.chisquare(counts).pvalue > 1e-6


def test_state_draw_frequencies_match_selection():
    config = SimConfig(selection=SelectionProbs(0.2, 0.5, 0.3),
                       transitions_per_node=10)
    rng = node_rng(9, 0)
    counts = np.zeros(3)
    for _ in range(100_000):
        node = NodeState()
        _begin_event(config, node, 0, rng)
        counts[int(node.current_state)] += 1
    assert sps.chisquare(counts, f_exp=counts.sum()
                         * np.array([0.2, 0.5, 0.3])).pvalue > 1e-6


def test_jittered_broadcast_lengths_and_offsets():
    config = SimConfig(selection=ALWAYS_BROADCAST, transitions_per_node=10,
                       imperfections=Imperfections(tb_jitter=(24, 39)))
    rng = node_rng(4, 0)
    lengths = []
    for _ in range(5000):
        node = NodeState()
        _begin_event(config, node, 0, rng)
        lengths.append(node.state_length)
        offsets = [o for o, _ in node.beacon_schedule]
        assert len(set(offsets)) == 13
        assert 0 <= min(offsets) and max(offsets) < node.state_length
    lengths = np.array(lengths)
    assert lengths.min() >= 24 and lengths.max() <= 39
    assert lengths.mean() == pytest.approx(31.5, abs=0.3)


def test_networking_only_run_is_silent():
    config = SimConfig(selection=ALWAYS_NETWORK, n_nodes=2,
                       transitions_per_node=200)
    m = TickEngine(config).run()
    assert m.tx_count == 0 and m.rx_count == 0
    assert m.duration_ms == 200 * 100
    assert m.network_event_count == 400
    assert m.state_time_ms[2] == 2 * m.duration_ms
    assert m.state_time_ms[0] == m.state_time_ms[1] == 0


def test_broadcast_only_run_never_delivers():
    config = SimConfig(selection=ALWAYS_BROADCAST, n_nodes=2,
                       transitions_per_node=300)
    m = TickEngine(config).run()
    assert m.rx_count == 0
    assert m.tx_count > 0
    assert sum(m.losses.values()) == m.pair_count()
    assert m.losses["collision"] == 0  # no one listens, nothing competes


def _manual_nodes(n):
    nodes = [NodeState() for _ in range(n)]
    rngs = [node_rng(0, i) for i in range(n)]
    shadows = [shadow_rng(0, i) for i in range(n)]
    return nodes, rngs, shadows


def test_step_delivers_single_copy_to_listener():
    config = SimConfig(n_nodes=2, transitions_per_node=10)
    nodes, rngs, shadows = _manual_nodes(2)
    nodes[0].current_state = State.BROADCAST
    nodes[0].state_length = 100
    nodes[0].beacon_schedule = [(0, 1)]
    nodes[1].current_state = State.SCAN
    nodes[1].state_length = 60
    result = step(config, nodes, 0, rngs, shadows)
    assert result.transmissions == [(0, 1)]
    assert result.receptions == [(1, 0, 1, pytest.approx(np.nan, nan_ok=True))]
    assert nodes[1].pending_rx_count == 1


def test_step_destroys_all_overlapping_copies():
    config = SimConfig(n_nodes=3, transitions_per_node=10)
    nodes, rngs, shadows = _manual_nodes(3)
    for i in (0, 1):
        nodes[i].current_state = State.BROADCAST
        nodes[i].state_length = 100
        nodes[i].beacon_schedule = [(0, 1)]
    nodes[2].current_state = State.SCAN
    nodes[2].state_length = 60
    result = step(config, nodes, 0, rngs, shadows)
    assert result.receptions == []
    assert result.losses["collision"] == 2
    assert nodes[2].pending_rx_count == 0


def test_scan_length_grows_with_messages_caught():
    config = SimConfig(n_nodes=2, transitions_per_node=10,
                       imperfections=Imperfections(proc_cost_per_msg=7.0))
    nodes, rngs, shadows = _manual_nodes(2)
    nodes[0].current_state = State.BROADCAST
    nodes[0].state_length = 200
    nodes[0].beacon_schedule = [(0, 1), (2, 1)]
    nodes[1].current_state = State.SCAN
    nodes[1].state_length = 60
    for t in range(61):
        step(config, nodes, t, rngs, shadows)
    assert nodes[1].pending_rx_count == 2
    assert nodes[1].state_length == 60 + 14
    assert nodes[1].scan_blind_until == 74


def test_blind_tail_rejects_late_beacons():
    from beaconcast.model import ProtocolParams

    # 20 ms extraction tail: offsets 60..79 of a scan event are blind
    protocol = ProtocolParams.from_event_durations(t_s=80.0, t_comp_base=20.0)
    config = SimConfig(protocol=protocol, n_nodes=2, transitions_per_node=10)
    nodes, rngs, shadows = _manual_nodes(2)
    nodes[0].current_state = State.BROADCAST
    nodes[0].state_length = 100
    nodes[0].beacon_schedule = [(65, 1)]
    nodes[1].current_state = State.SCAN
    nodes[1].state_length = 80
    nodes[1].state_elapsed = 0
    blind = None
    for t in range(70):
        result = step(config, nodes, t, rngs, shadows)
        if result.losses["scan_blind"]:
            blind = t
    assert blind == 65
    assert nodes[1].pending_rx_count == 0


def test_extraction_time_produces_blind_losses_end_to_end():
    from beaconcast.model import ProtocolParams

    protocol = ProtocolParams.from_event_durations(t_s=80.0, t_comp_base=20.0)
    config = SimConfig.from_shares(StateShares(0.5, 0.5, 0.0),
                                   protocol=protocol, n_nodes=3,
                                   transitions_per_node=1_500, seed=6)
    m = TickEngine(config).run()
    assert m.losses["scan_blind"] > 0
    assert m.pair_count() == sum(m.losses.values()) + m.rx_count


def test_tick_engine_is_deterministic():
    config = SimConfig.from_shares(StateShares(0.5, 0.5, 0.0), n_nodes=3,
                                   transitions_per_node=1_000, seed=8)
    a = TickEngine(config).run()
    b = TickEngine(config).run()
    assert_same_receptions(a.receptions, b.receptions)
    assert a.losses == b.losses
    assert a.duration_ms == b.duration_ms


def test_tick_engine_conserves_pairs_with_shadowed_link():
    from beaconcast.link import LinkParams

    positions = np.array([[0.0, 0.0, 0.0], [600.0, 0.0, 0.0],
                          [0.0, 1100.0, 0.0]])
    config = SimConfig.from_shares(StateShares(0.5, 0.5, 0.0), n_nodes=3,
                                   transitions_per_node=1_500, seed=10,
                                   positions=positions,
                                   link=LinkParams(shadowing_sigma=6.0))
    m = TickEngine(config).run()
    assert m.pair_count() == sum(m.losses.values()) + m.rx_count
    assert m.losses["out_of_range"] > 0
    assert np.all(np.isfinite(m.receptions["rssi_dbm"]))
