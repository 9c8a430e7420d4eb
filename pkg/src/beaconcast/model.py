"""Closed-form probabilistic model of the broadcast/scan/networking protocol.

Each node cycles through three radio states: Broadcast (send one position
beacon on every channel in sequence), Scan (listen on a single channel) and
Networking (radio reserved for other traffic). At the end of each state the
next one is drawn independently with fixed selection probabilities, so the
long-run fraction of time spent in a state is the selection probability
weighted by the state duration. All operations here are pure functions of
their inputs; time is measured in milliseconds throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from .errors import InvalidParameterError

# Absolute tolerance for simplex constraints. Inputs further out are rejected
# rather than renormalized: silent renormalization hides config bugs.
SIMPLEX_TOL = 1e-12

_DUR_TOL = 1e-9


class State(IntEnum):
    """The three radio states a node can occupy."""

    BROADCAST = 0
    SCAN = 1
    NETWORKING = 2


@dataclass(frozen=True)
class ProtocolParams:
    """Timing constants of the protocol, all in milliseconds.

    A broadcast event visits all ``n_channels`` channels, occupying each for
    ``t_beacon`` with a ``t_switch`` retuning gap, so
    ``t_b = n_channels * (t_beacon + t_switch)``. A scan event listens for
    ``t_rx`` and then spends ``t_comp_base`` extracting received messages, so
    ``t_s = t_rx + t_comp_base``. A networking event occupies the radio for
    ``t_n`` without sending or hearing beacons.
    """

    t_beacon: float = 1.0
    t_switch: float = 30.0 / 13.0 - 1.0
    n_channels: int = 13
    t_b: float = 30.0
    t_rx: float = 60.0
    t_comp_base: float = 0.0
    t_s: float = 60.0
    t_n: float = 100.0

    def __post_init__(self) -> None:
        if not (self.t_beacon > 0 and self.t_b > 0 and self.t_rx > 0
                and self.t_s > 0 and self.t_n > 0):
            raise InvalidParameterError("durations must be positive")
        if self.t_switch < 0 or self.t_comp_base < 0:
            raise InvalidParameterError("t_switch and t_comp_base must be >= 0")
        if int(self.n_channels) != self.n_channels or self.n_channels < 1:
            raise InvalidParameterError("n_channels must be a positive integer")
        if abs(self.t_b - self.n_channels * (self.t_beacon + self.t_switch)) > _DUR_TOL:
            raise InvalidParameterError(
                "t_b must equal n_channels * (t_beacon + t_switch)")
        if abs(self.t_s - (self.t_rx + self.t_comp_base)) > _DUR_TOL:
            raise InvalidParameterError("t_s must equal t_rx + t_comp_base")
        if self.t_beacon > self.t_b + _DUR_TOL:
            raise InvalidParameterError("t_beacon cannot exceed t_b")

    @classmethod
    def from_event_durations(cls, t_b: float = 30.0, t_s: float = 60.0,
                             t_n: float = 100.0, t_beacon: float = 1.0,
                             n_channels: int = 13,
                             t_comp_base: float = 0.0) -> "ProtocolParams":
        """Build params from event durations, deriving t_switch and t_rx.

        ``t_switch`` absorbs whatever part of the per-channel dwell is not
        beacon airtime; ``t_rx`` is the scan time left after baseline
        processing.
        """
        if n_channels < 1:
            raise InvalidParameterError("n_channels must be a positive integer")
        t_switch = t_b / n_channels - t_beacon
        if t_switch < -_DUR_TOL:
            raise InvalidParameterError(
                "t_b too short for n_channels beacons of t_beacon each")
        t_rx = t_s - t_comp_base
        if t_rx <= 0:
            raise InvalidParameterError("t_comp_base must leave t_rx > 0")
        return cls(t_beacon=t_beacon, t_switch=max(t_switch, 0.0),
                   n_channels=n_channels, t_b=t_b, t_rx=t_rx,
                   t_comp_base=t_comp_base, t_s=t_s, t_n=t_n)


def _check_simplex(values: tuple[float, float, float], what: str) -> None:
    for v in values:
        if not -SIMPLEX_TOL <= v <= 1.0 + SIMPLEX_TOL:
            raise InvalidParameterError(f"{what} components must lie in [0, 1]")
    if abs(sum(values) - 1.0) > SIMPLEX_TOL:
        raise InvalidParameterError(f"{what} components must sum to 1")


@dataclass(frozen=True)
class StateShares:
    """Long-run fractions of time spent in each state (sum to 1)."""

    p_b: float
    p_s: float
    p_n: float = 0.0

    def __post_init__(self) -> None:
        _check_simplex((self.p_b, self.p_s, self.p_n), "StateShares")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_b, self.p_s, self.p_n)


@dataclass(frozen=True)
class SelectionProbs:
    """Per-transition probabilities of entering each state (sum to 1)."""

    rho_b: float
    rho_s: float
    rho_n: float = 0.0

    def __post_init__(self) -> None:
        _check_simplex((self.rho_b, self.rho_s, self.rho_n), "SelectionProbs")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.rho_b, self.rho_s, self.rho_n)


@dataclass(frozen=True)
class WindowSpec:
    """Observation window for event counting, default one second."""

    t_w: float = 1000.0

    def __post_init__(self) -> None:
        if self.t_w <= 0:
            raise InvalidParameterError("t_w must be positive")


def steady_state_shares(rho: SelectionProbs, p: ProtocolParams) -> StateShares:
    """Convert selection probabilities into long-run time shares.

    Each state's share is its selection probability weighted by the state
    duration: ``P_x = rho_x * T_x / sum_y(rho_y * T_y)``. A state drawn
    rarely but held long can still dominate the timeline.

    Parameters
    ----------
    rho : SelectionProbs
        Per-transition selection probabilities.
    p : ProtocolParams
        Protocol timing constants.

    Returns
    -------
    StateShares
        Fractions of time spent in Broadcast, Scan and Networking.
    """
    num_b = rho.rho_b * p.t_b
    num_s = rho.rho_s * p.t_s
    num_n = rho.rho_n * p.t_n
    denom = num_b + num_s + num_n
    if denom <= 0:
        raise InvalidParameterError("selection/duration weights sum to zero")
    return StateShares(num_b / denom, num_s / denom, num_n / denom)


def selection_probs(shares: StateShares, p: ProtocolParams) -> SelectionProbs:
    """Invert :func:`steady_state_shares`: time shares to selection probs.

    Solves ``P_x = rho_x * T_x / sum` for ``rho``: each selection
    probability is proportional to ``P_x / T_x``, then normalized. Round
    trip with :func:`steady_state_shares` is the identity.
    """
    w_b = shares.p_b / p.t_b
    w_s = shares.p_s / p.t_s
    w_n = shares.p_n / p.t_n
    denom = w_b + w_s + w_n
    if denom <= 0:
        raise InvalidParameterError("share/duration weights sum to zero")
    return SelectionProbs(w_b / denom, w_s / denom, w_n / denom)


def beacon_probability(shares: StateShares, p: ProtocolParams) -> float:
    """Probability that a node is on-air on a given channel at an instant.

    During a broadcast event the node occupies each particular channel for
    ``t_beacon`` out of ``t_b``, so the instantaneous per-channel transmit
    probability is ``P_B * t_beacon / t_b``.
    """
    return shares.p_b * p.t_beacon / p.t_b


def collision_probability(p_beacon: float, k: int) -> float:
    """Probability that at least one of k-1 other nodes is also on-air.

    With k nodes transmitting independently, a given transmission is lost
    when any of the remaining k-1 nodes hits the same channel at the same
    instant: ``1 - (1 - p_beacon)**(k - 1)``.
    """
    if int(k) != k or k < 1:
        raise InvalidParameterError("k must be a positive integer")
    if not 0.0 <= p_beacon <= 1.0:
        raise InvalidParameterError("p_beacon must lie in [0, 1]")
    if k == 1:
        return 0.0
    if p_beacon == 1.0:
        return 1.0
    # expm1/log1p keep precision for tiny p_beacon and large k
    return -math.expm1((k - 1) * math.log1p(-p_beacon))


def success_probability(shares: StateShares, p: ProtocolParams, k: int) -> float:
    """Probability that a listener catches an uncollided beacon tick.

    Requires one node scanning (``P_S``), another broadcasting the observed
    channel (``P_B``), and none of the remaining nodes transmitting over it.
    """
    p_beacon = beacon_probability(shares, p)
    return shares.p_s * shares.p_b * (1.0 - collision_probability(p_beacon, k))


def expected_events(shares: StateShares, p: ProtocolParams, w: WindowSpec,
                    state: State) -> float:
    """Average number of events of one state inside an observation window.

    ``N_x = P_x * t_w / T_x``: the window time attributed to the state,
    divided by the event duration. Returned as a real number; rounding is
    the caller's concern.
    """
    share, duration = {
        State.BROADCAST: (shares.p_b, p.t_b),
        State.SCAN: (shares.p_s, p.t_s),
        State.NETWORKING: (shares.p_n, p.t_n),
    }[State(state)]
    return share * w.t_w / duration


def expected_successes(shares: StateShares, p: ProtocolParams, w: WindowSpec,
                       k: int) -> float:
    """Average number of beacons a listener receives per window.

    Success probability applied to every broadcast opportunity in the
    window: ``P_S * P_B * (1 - P_collision(k)) * t_w / t_b``.
    """
    return success_probability(shares, p, k) * w.t_w / p.t_b


def interarrival_rate(p: ProtocolParams) -> float:
    """Exponential rate of gaps between receptions at balanced shares.

    With ``P_S = P_B = 0.5`` and no networking the reception stream is well
    approximated by an exponential law with rate ``1 / (2 * t_s)`` per ms.
    """
    if p.t_s <= 0:
        raise InvalidParameterError("t_s must be positive")
    return 1.0 / (2.0 * p.t_s)
