"""Simulation and analysis toolkit for a Wi-Fi beacon position-broadcast protocol.

Small UAVs can share position by packing a report into the SSID of ordinary
Wi-Fi beacon frames and duty-cycling the radio between broadcasting on all
channels, scanning a single channel and regular networking. This package
provides the closed-form model of that protocol, a tick-based multi-node
simulator with radio-collision and hardware-imperfection modeling, a
log-distance link model, the beacon SSID codec and the analysis helpers that
turn simulation output into plot-ready data.
"""

from .errors import (
    BeaconcastError,
    CrcMismatchError,
    EmptyDataError,
    EncodingError,
    InsufficientDataError,
    InvalidParameterError,
    PayloadAlphabetError,
    PayloadLengthError,
    RankDeficiencyError,
)
from .model import (
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

__all__ = [
    "BeaconcastError",
    "CrcMismatchError",
    "EmptyDataError",
    "EncodingError",
    "InsufficientDataError",
    "InvalidParameterError",
    "PayloadAlphabetError",
    "PayloadLengthError",
    "RankDeficiencyError",
    "ProtocolParams",
    "SelectionProbs",
    "State",
    "StateShares",
    "WindowSpec",
    "beacon_probability",
    "collision_probability",
    "expected_events",
    "expected_successes",
    "interarrival_rate",
    "selection_probs",
    "steady_state_shares",
    "success_probability",
]

__version__ = "0.1.0"
