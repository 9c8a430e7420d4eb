"""Tests for the closed-form protocol model."""

from __future__ import annotations

import math

import numpy as np
import pytest

from beaconcast import (
    InvalidParameterError,
    ProtocolParams,
    SelectionProbs,
    State,
    StateShares,
    WindowSpec,
    beacon_probability,
    collision_probability,
    expected_events,
    expected_successes,
    interarrival_rate,
    selection_probs,
    steady_state_shares,
    success_probability,
)

DEFAULTS = ProtocolParams()
BALANCED = StateShares(0.5, 0.5, 0.0)


def test_default_params_satisfy_timing_identities() -> None:
    assert DEFAULTS.t_b == pytest.approx(
        DEFAULTS.n_channels * (DEFAULTS.t_beacon + DEFAULTS.t_switch))
    assert DEFAULTS.t_s == pytest.approx(DEFAULTS.t_rx + DEFAULTS.t_comp_base)


def test_from_event_durations_derives_switch_and_rx() -> None:
    p = ProtocolParams.from_event_durations(t_b=30, t_s=60, t_n=100,
                                            t_beacon=1, n_channels=13)
    assert p.t_switch == pytest.approx(30 / 13 - 1)
    assert p.t_rx == 60
    q = ProtocolParams.from_event_durations(t_s=60, t_comp_base=20)
    assert q.t_rx == 40


@pytest.mark.parametrize("kwargs", [
    {"t_b": 0.5, "n_channels": 1, "t_beacon": 1},  # t_b shorter than one beacon
    {"t_comp_base": 60.0},                          # leaves no listening time
])
def test_from_event_durations_rejects_impossible_timing(kwargs) -> None:
    with pytest.raises(InvalidParameterError):
        ProtocolParams.from_event_durations(**kwargs)


def test_params_reject_broken_identities() -> None:
    with pytest.raises(InvalidParameterError):
        ProtocolParams(t_b=31.0)  # breaks t_b = n_ch * (t_beacon + t_switch)
    with pytest.raises(InvalidParameterError):
        ProtocolParams(t_comp_base=5.0)  # breaks t_s = t_rx + t_comp_base
    with pytest.raises(InvalidParameterError):
        ProtocolParams.from_event_durations(n_channels=0)


@pytest.mark.parametrize("values", [(0.6, 0.2, 0.1), (0.5, 0.6, -0.1), (1.1, -0.1, 0.0)])
def test_simplex_validation_rejects_bad_shares(values) -> None:
    with pytest.raises(InvalidParameterError):
        StateShares(*values)
    with pytest.raises(InvalidParameterError):
        SelectionProbs(*values)


def test_window_must_be_positive() -> None:
    with pytest.raises(InvalidParameterError):
        WindowSpec(0.0)


def test_shares_worked_example_two_broadcasts_per_scan() -> None:
    """Selecting Broadcast twice as often as Scan balances 30 ms vs 60 ms."""
    shares = steady_state_shares(SelectionProbs(2 / 3, 1 / 3, 0.0), DEFAULTS)
    assert shares.as_tuple() == pytest.approx((0.5, 0.5, 0.0), abs=1e-12)
    rho = selection_probs(BALANCED, DEFAULTS)
    assert rho.as_tuple() == pytest.approx((2 / 3, 1 / 3, 0.0), abs=1e-12)


def test_shares_single_state_passthrough() -> None:
    assert steady_state_shares(SelectionProbs(1, 0, 0), DEFAULTS).as_tuple() == (1, 0, 0)
    assert selection_probs(StateShares(1, 0, 0), DEFAULTS).as_tuple() == (1, 0, 0)


def test_shares_three_state_example() -> None:
    shares = steady_state_shares(SelectionProbs(1 / 3, 1 / 3, 1 / 3), DEFAULTS)
    assert shares.as_tuple() == pytest.approx((30 / 190, 60 / 190, 100 / 190), abs=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_shares_three_state_against_monte_carlo(seed: int) -> None:
    """Time-share fractions of an i.i.d. state sequence match the formula."""
    rng = np.random.default_rng(seed)
    states = rng.choice(3, size=200_000, p=[1 / 3, 1 / 3, 1 / 3])
    durations = np.array([30.0, 60.0, 100.0])[states]
    total = durations.sum()
    empirical = [durations[states == s].sum() / total for s in range(3)]
    expected = steady_state_shares(SelectionProbs(1 / 3, 1 / 3, 1 / 3), DEFAULTS)
    assert empirical == pytest.approx(expected.as_tuple(), abs=5e-3)


@pytest.mark.parametrize("seed", range(8))
def test_shares_selection_round_trip(seed: int) -> None:
    rng = np.random.default_rng(seed)
    raw = rng.random(3)
    rho = SelectionProbs(*(raw / raw.sum()))
    p = ProtocolParams.from_event_durations(
        t_b=float(rng.integers(10, 60)), t_s=float(rng.integers(20, 200)),
        t_n=float(rng.integers(50, 400)), t_beacon=1.0,
        n_channels=int(rng.integers(1, 14)))
    back = selection_probs(steady_state_shares(rho, p), p)
    assert back.as_tuple() == pytest.approx(rho.as_tuple(), abs=1e-9)
    shares = StateShares(*(raw / raw.sum()))
    forth = steady_state_shares(selection_probs(shares, p), p)
    assert forth.as_tuple() == pytest.approx(shares.as_tuple(), abs=1e-9)


def test_equal_durations_collapse_shares_to_selection() -> None:
    p = ProtocolParams.from_event_durations(t_b=50, t_s=50, t_n=50,
                                            t_beacon=1, n_channels=10)
    rho = SelectionProbs(0.2, 0.3, 0.5)
    assert steady_state_shares(rho, p).as_tuple() == pytest.approx(
        rho.as_tuple(), abs=1e-15)


def test_beacon_probability_examples() -> None:
    assert beacon_probability(BALANCED, DEFAULTS) == pytest.approx(1 / 60)
    assert beacon_probability(StateShares(0, 1, 0), DEFAULTS) == 0.0
    saturated = ProtocolParams.from_event_durations(t_b=30, t_beacon=30,
                                                    n_channels=1)
    assert beacon_probability(StateShares(1, 0, 0), saturated) == pytest.approx(1.0)


def test_collision_probability_examples() -> None:
    assert collision_probability(0.7, 1) == 0.0
    assert collision_probability(1 / 60, 2) == pytest.approx(1 / 60)
    assert collision_probability(1 / 60, 100) == pytest.approx(0.8106020105, abs=1e-9)


def test_collision_probability_rejects_bad_input() -> None:
    with pytest.raises(InvalidParameterError):
        collision_probability(0.5, 0)
    with pytest.raises(InvalidParameterError):
        collision_probability(1.5, 2)


@pytest.mark.parametrize("p_beacon,k", [(0.001, 5), (0.01, 20), (0.1, 3), (0.5, 10)])
def test_collision_probability_against_bernoulli_monte_carlo(
        p_beacon: float, k: int) -> None:
    """Fraction of trials where any of k-1 coins land heads matches the formula."""
    rng = np.random.default_rng(1234)
    n = 1_000_000
    hits = (rng.random((n, k - 1)) < p_beacon).any(axis=1).mean()
    expected = collision_probability(p_beacon, k)
    se = math.sqrt(expected * (1 - expected) / n)
    assert abs(hits - expected) < 4 * se + 1e-9


def test_collision_probability_monotone_in_both_arguments() -> None:
    probs = [0.0, 0.001, 0.01, 0.1, 0.5, 1.0]
    for k in (1, 2, 5, 50):
        values = [collision_probability(p, k) for p in probs]
        assert all(b >= a for a, b in zip(values, values[1:]))
    for p in probs:
        values = [collision_probability(p, k) for k in (1, 2, 5, 50, 500)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[0] == 0.0


def test_success_probability_examples() -> None:
    assert success_probability(BALANCED, DEFAULTS, 2) == pytest.approx(
        0.25 * 59 / 60)
    assert success_probability(StateShares(1, 0, 0), DEFAULTS, 2) == 0.0
    assert success_probability(BALANCED, DEFAULTS, 1) == pytest.approx(0.25)


def test_expected_events_examples() -> None:
    w = WindowSpec(1000.0)
    assert expected_events(BALANCED, DEFAULTS, w, State.BROADCAST) == pytest.approx(
        1000 / 60)
    assert expected_events(BALANCED, DEFAULTS, w, State.NETWORKING) == 0.0
    assert expected_events(BALANCED, DEFAULTS, w, State.SCAN) == pytest.approx(25 / 3)


def test_expected_successes_examples() -> None:
    w = WindowSpec(1000.0)
    assert expected_successes(BALANCED, DEFAULTS, w, 2) == pytest.approx(
        8.194444, abs=1e-5)
    assert expected_successes(BALANCED, DEFAULTS, w, 1) == pytest.approx(25 / 3)
    assert expected_successes(StateShares(0, 1, 0), DEFAULTS, w, 2) == 0.0


def test_interarrival_rate_examples() -> None:
    assert interarrival_rate(DEFAULTS) == pytest.approx(1 / 120, abs=1e-9)
    assert interarrival_rate(
        ProtocolParams.from_event_durations(t_s=120)) == pytest.approx(1 / 240)
    assert interarrival_rate(
        ProtocolParams.from_event_durations(t_s=1e9)) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_probability_outputs_stay_in_unit_interval(seed: int) -> None:
    rng = np.random.default_rng(seed)
    raw = rng.random(3)
    shares = StateShares(*(raw / raw.sum()))
    p = ProtocolParams.from_event_durations(
        t_b=float(rng.integers(5, 100)), t_s=float(rng.integers(10, 300)),
        t_n=float(rng.integers(10, 500)), t_beacon=1.0,
        n_channels=int(rng.integers(1, 14)))
    w = WindowSpec(float(rng.integers(100, 5000)))
    k = int(rng.integers(1, 200))
    for value in (beacon_probability(shares, p),
                  collision_probability(beacon_probability(shares, p), k),
                  success_probability(shares, p, k)):
        assert 0.0 <= value <= 1.0
    assert expected_successes(shares, p, w, k) <= expected_events(
        shares, p, w, State.BROADCAST) + 1e-12
