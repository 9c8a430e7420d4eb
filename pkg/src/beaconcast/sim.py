"""Multi-node behavioral simulation of the broadcast/scan/networking protocol.

Every node runs the same state machine on a shared 1 ms tick grid: broadcast
events place one beacon on each channel, scan events listen on the node's
fixed channel for ``t_rx`` and then go blind while messages are extracted,
networking events occupy the radio without touching beacons. A beacon is
received when exactly one in-range transmission hits the listener's channel
in a tick; any overlap destroys all copies involved.

Two engines produce the same statistics. The vectorized engine in this
module generates whole per-node event chains up front and resolves
receptions with array operations; it covers every feedback-free
configuration. Configurations where reception history feeds back into the
timeline (per-message processing cost, bounded transmit buffers) run on the
per-tick reference engine in :mod:`beaconcast.ticksim`. The engine choice is
a pure function of the config, so a given config and seed always produce
identical output.

Beacon scheduling inside a broadcast event supports two modes. The
``sequential`` mode uses the literal hardware schedule: channel c at offset
``floor(c * t_b / n_channels)``. Because all event durations share a
multi-millisecond common divisor, node phase differences then freeze on a
coarse lattice and same-tick collisions are far more frequent than the
independence model predicts. The default ``cyclic`` mode rotates the whole
schedule by a fresh uniform offset each event, which preserves the
one-beacon-per-channel structure while making per-channel transmission
ticks independent across nodes, matching the closed-form collision model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParameterError
from .link import LinkParams
from .model import (
    ProtocolParams,
    SelectionProbs,
    StateShares,
    WindowSpec,
    selection_probs,
)

DEFAULT_TB_JITTER = (24, 39)  # measured event-duration spread, ms

RECEPTION_DTYPE = np.dtype([
    ("time_ms", np.int64),
    ("receiver", np.int32),
    ("sender", np.int32),
    ("channel", np.int16),
    ("rssi_dbm", np.float64),
])

LOSS_CATEGORIES = ("channel_mismatch", "state_mismatch", "scan_blind",
                   "out_of_range", "collision")


@dataclass(frozen=True)
class Imperfections:
    """Optional hardware-limitation models, all disabled by default."""

    tb_jitter: Optional[tuple[int, int]] = None  # uniform integer ms bounds
    proc_cost_per_msg: float = 0.0               # blind ms appended per message
    tx_buffer_frames: Optional[int] = None       # beacon frame queue bound

    def __post_init__(self) -> None:
        if self.tb_jitter is not None:
            lo, hi = self.tb_jitter
            if int(lo) != lo or int(hi) != hi or not 1 <= lo <= hi:
                raise InvalidParameterError(
                    "tb_jitter bounds must be integers with 1 <= min <= max")
        if self.proc_cost_per_msg < 0:
            raise InvalidParameterError("proc_cost_per_msg must be >= 0")
        if self.tx_buffer_frames is not None and self.tx_buffer_frames < 1:
            raise InvalidParameterError("tx_buffer_frames must be >= 1")


def _default_selection() -> SelectionProbs:
    # equal time in Broadcast and Scan with the default timings
    return SelectionProbs(2 / 3, 1 / 3, 0.0)


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulation scenario.

    ``selection`` is one :class:`SelectionProbs` applied to every node, or a
    sequence with one entry per node for asymmetric roles (for example a
    dedicated always-scanning receiver among pure transmitters).
    """

    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    selection: object = field(default_factory=_default_selection)
    n_nodes: int = 2
    scan_channels: object = 1        # int for all nodes, or one per node
    positions: object = None         # (n_nodes, 3) meters, required with link
    link: Optional[LinkParams] = None
    tick_ms: int = 1
    transitions_per_node: int = 500_000
    seed: int = 0
    window: WindowSpec = field(default_factory=WindowSpec)
    imperfections: Imperfections = field(default_factory=Imperfections)
    beacon_phase: str = "cyclic"

    def __post_init__(self) -> None:
        if self.tick_ms != 1:
            raise InvalidParameterError("tick_ms is fixed at 1 ms")
        if self.n_nodes < 1:
            raise InvalidParameterError("n_nodes must be >= 1")
        if self.transitions_per_node < 1:
            raise InvalidParameterError("transitions_per_node must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError("seed must fit in 64 unsigned bits")
        if self.beacon_phase not in ("cyclic", "sequential"):
            raise InvalidParameterError(
                "beacon_phase must be 'cyclic' or 'sequential'")
        if not isinstance(self.selection, SelectionProbs):
            per_node = tuple(self.selection)
            if len(per_node) != self.n_nodes:
                raise InvalidParameterError(
                    "per-node selection needs one entry per node")
            if not all(isinstance(s, SelectionProbs) for s in per_node):
                raise InvalidParameterError(
                    "selection entries must be SelectionProbs")
            object.__setattr__(self, "selection", per_node)
        p = self.protocol
        for name in ("t_b", "t_s", "t_n", "t_rx", "t_comp_base", "t_beacon"):
            value = getattr(p, name)
            if int(value) != value:
                raise InvalidParameterError(
                    f"{name}={value} must be an integral number of ms ticks")
        if p.t_beacon != self.tick_ms:
            raise InvalidParameterError("t_beacon must equal one 1 ms tick")
        if p.t_b < p.n_channels:
            raise InvalidParameterError(
                "t_b must allow at least one tick per channel")
        jit = self.imperfections.tb_jitter
        if jit is not None and jit[0] < p.n_channels:
            raise InvalidParameterError(
                "tb_jitter minimum must allow one tick per channel")
        if isinstance(self.scan_channels, (int, np.integer)):
            channels = (int(self.scan_channels),) * self.n_nodes
        else:
            channels = tuple(int(c) for c in self.scan_channels)
        if len(channels) != self.n_nodes:
            raise InvalidParameterError(
                "scan_channels must give one channel per node")
        if any(not 1 <= c <= p.n_channels for c in channels):
            raise InvalidParameterError(
                f"scan channels must lie in [1, {p.n_channels}]")
        object.__setattr__(self, "scan_channels", channels)
        if self.positions is not None:
            pos = np.array(self.positions, dtype=float)
            if pos.shape != (self.n_nodes, 3):
                raise InvalidParameterError(
                    f"positions must have shape ({self.n_nodes}, 3)")
            pos.setflags(write=False)
            object.__setattr__(self, "positions", pos)
        if self.link is not None:
            if self.positions is None:
                raise InvalidParameterError("a link model requires positions")
            d = _distance_matrix(self.positions)
            off_diag = d[~np.eye(self.n_nodes, dtype=bool)]
            if off_diag.size and off_diag.min() < self.link.d0:
                raise InvalidParameterError(
                    "node pairs must be at least d0 apart for the link model")

    @classmethod
    def from_shares(cls, shares: StateShares,
                    protocol: ProtocolParams | None = None,
                    **kwargs) -> "SimConfig":
        """Build a config from target time shares instead of selection probs."""
        protocol = protocol if protocol is not None else ProtocolParams()
        return cls(protocol=protocol,
                   selection=selection_probs(shares, protocol), **kwargs)

    @property
    def feedback_free(self) -> bool:
        """True when reception history cannot alter the event timeline."""
        imp = self.imperfections
        return imp.proc_cost_per_msg == 0.0 and imp.tx_buffer_frames is None

    def selection_for(self, node: int) -> SelectionProbs:
        """Selection probabilities governing one node's state draws."""
        if isinstance(self.selection, SelectionProbs):
            return self.selection
        return self.selection[node]


@dataclass
class SimMetrics:
    """Everything collected from one simulation run."""

    receptions: np.ndarray           # RECEPTION_DTYPE records, time-ordered
    collisions_observed: int         # beacon copies destroyed by overlap
    tx_count: int                    # beacon copies transmitted
    rx_count: int
    network_event_count: int
    broadcast_event_count: int
    scan_event_count: int
    losses: dict                     # per-category counts, see LOSS_CATEGORIES
    per_window_throughput: list      # one int array per node, msgs per window
    interarrival_ms: list            # one int array per node, reception gaps
    state_time_ms: np.ndarray        # (3,) total ms per state, all nodes
    channel_beacons: np.ndarray      # (n_channels,) transmitted copies
    duration_ms: int                 # simulated horizon (min node chain end)
    n_nodes: int
    t_w: float
    tx_dropped: int = 0              # frames lost to a bounded tx buffer

    @property
    def throughput_per_node(self) -> np.ndarray:
        """Received messages per second, one entry per node."""
        seconds = self.duration_ms / 1000.0
        counts = np.zeros(self.n_nodes)
        if self.receptions.size:
            got = np.bincount(self.receptions["receiver"],
                              minlength=self.n_nodes)
            counts += got
        return counts / seconds

    @property
    def mean_throughput(self) -> float:
        """Mean per-node reception rate in messages per second."""
        return float(self.throughput_per_node.mean())

    @property
    def empirical_shares(self) -> np.ndarray:
        """Observed fractions of node time per state (Broadcast, Scan, Networking)."""
        total = self.state_time_ms.sum()
        return self.state_time_ms / total

    def pair_count(self) -> int:
        """Number of (transmitted copy, potential receiver) pairs."""
        return self.tx_count * (self.n_nodes - 1)

    def loss_accounting(self) -> dict:
        """Full conservation ledger: every pair is received or lost once."""
        out = dict(self.losses)
        out["received"] = self.rx_count
        out["pairs"] = self.pair_count()
        return out


def apply_tb_jitter(base_tb: float, jitter: Optional[tuple[int, int]],
                    rng: np.random.Generator) -> int:
    """Broadcast-event duration for one event, jittered when enabled."""
    if jitter is None:
        return int(base_tb)
    lo, hi = jitter
    return int(rng.integers(lo, hi + 1))


def processing_stretch(base_t_comp: float, msgs_received_this_scan: int,
                       proc_cost_per_msg: float) -> float:
    """Blind time at the end of a scan: baseline plus per-message cost."""
    if base_t_comp < 0 or msgs_received_this_scan < 0 or proc_cost_per_msg < 0:
        raise InvalidParameterError("processing inputs must be >= 0")
    return base_t_comp + proc_cost_per_msg * msgs_received_this_scan


def node_rng(seed: int, node: int) -> np.random.Generator:
    """Dedicated behavior stream per node; stable under node-count changes."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(node,)))


def shadow_rng(seed: int, node: int) -> np.random.Generator:
    """Dedicated shadowing-noise stream per receiving node."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(node, 1)))


def _distance_matrix(positions: np.ndarray) -> np.ndarray:
    delta = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((delta**2).sum(axis=2))


def beacon_offsets(channel_count: int, event_length: int) -> np.ndarray:
    """Unshifted in-event beacon offsets, one per channel (0-based index)."""
    ch = np.arange(channel_count, dtype=np.int64)
    return (ch * event_length) // channel_count


def run(config: SimConfig) -> SimMetrics:
    """Run one simulation, choosing the engine from the config.

    Feedback-free configs use the vectorized engine; configs with
    processing cost or a bounded transmit buffer use the per-tick engine.
    Deterministic for a fixed config and seed either way.
    """
    if config.feedback_free:
        return run_batch(config)
    from .ticksim import TickEngine  # deferred: ticksim imports this module

    return TickEngine(config).run()


def _draw_states(rng: np.random.Generator, selection: SelectionProbs,
                 count: int) -> np.ndarray:
    boundaries = np.array([selection.rho_b, selection.rho_b + selection.rho_s])
    return np.searchsorted(boundaries, rng.random(count),
                           side="right").astype(np.int8)


class _NodeChain:
    """One node's full event timeline, generated up front."""

    __slots__ = ("states", "durations", "starts", "end", "beacon_ticks",
                 "scan_starts")

    def __init__(self, config: SimConfig, node: int) -> None:
        p = config.protocol
        rng = node_rng(config.seed, node)
        count = config.transitions_per_node
        self.states = _draw_states(rng, config.selection_for(node), count)
        durations = np.empty(count, dtype=np.int64)
        durations[self.states == 1] = int(p.t_s)
        durations[self.states == 2] = int(p.t_n)
        b_mask = self.states == 0
        n_b = int(b_mask.sum())
        jitter = config.imperfections.tb_jitter
        if jitter is None:
            lengths = np.full(n_b, int(p.t_b), dtype=np.int64)
        else:
            lengths = rng.integers(jitter[0], jitter[1] + 1,
                                   size=n_b).astype(np.int64)
        durations[b_mask] = lengths
        self.durations = durations
        starts = np.zeros(count, dtype=np.int64)
        np.cumsum(durations[:-1], out=starts[1:])
        self.starts = starts
        self.end = int(starts[-1] + durations[-1])
        if config.beacon_phase == "cyclic":
            shift = np.floor(rng.random(n_b) * lengths).astype(np.int64)
        else:
            shift = np.zeros(n_b, dtype=np.int64)
        ch = np.arange(p.n_channels, dtype=np.int64)
        offsets = (ch[None, :] * lengths[:, None]) // p.n_channels
        # (n_b, n_channels) absolute transmission ticks
        self.beacon_ticks = starts[b_mask][:, None] + (
            (offsets + shift[:, None]) % lengths[:, None])
        self.scan_starts = starts[self.states == 1]


def run_batch(config: SimConfig) -> SimMetrics:
    """Vectorized engine for feedback-free configs."""
    if not config.feedback_free:
        raise InvalidParameterError(
            "the vectorized engine cannot model processing cost or tx buffers")
    p = config.protocol
    n = config.n_nodes
    t_rx = int(p.t_rx)
    chains = [_NodeChain(config, i) for i in range(n)]
    t_end = min(c.end for c in chains)

    channel_beacons = np.zeros(p.n_channels, dtype=np.int64)
    copies_per_sender = np.zeros(n, dtype=np.int64)
    for i, c in enumerate(chains):
        per_channel = (c.beacon_ticks < t_end).sum(axis=0)
        channel_beacons += per_channel
        copies_per_sender[i] = per_channel.sum()
    tx_count = int(channel_beacons.sum())

    state_time = np.zeros(3, dtype=np.int64)
    n_events = np.zeros(3, dtype=np.int64)
    for c in chains:
        last = int(np.searchsorted(c.starts, t_end, side="right")) - 1
        state_time += np.bincount(c.states[:last],
                                  weights=c.durations[:last],
                                  minlength=3).astype(np.int64)
        state_time[c.states[last]] += t_end - c.starts[last]
        begun = c.states[c.starts < t_end]
        n_events += np.bincount(begun, minlength=3)

    if config.link is not None:
        distances = _distance_matrix(config.positions)
        from .link import rssi as link_rssi
        base_rssi = np.full((n, n), np.nan)
        for r in range(n):
            for s in range(n):
                if r != s:
                    base_rssi[r, s] = link_rssi(config.link, distances[r, s])
        sigma = config.link.shadowing_sigma
        sensitivity = config.link.sensitivity
    else:
        sigma = 0.0

    losses = {name: 0 for name in LOSS_CATEGORIES}
    rx_records = []
    per_window = []
    interarrival = []
    t_w = config.window.t_w
    n_windows = int(t_end // t_w)
    collisions = 0

    for r in range(n):
        ch_r = config.scan_channels[r] - 1
        tick_parts, sender_parts = [], []
        others_copies = int(copies_per_sender.sum() - copies_per_sender[r])
        for s in range(n):
            if s == r:
                continue
            col = chains[s].beacon_ticks[:, ch_r]
            col = col[col < t_end]
            tick_parts.append(col)
            sender_parts.append(np.full(col.size, s, dtype=np.int32))
        if tick_parts:
            ticks = np.concatenate(tick_parts)
            senders = np.concatenate(sender_parts)
        else:
            ticks = np.empty(0, dtype=np.int64)
            senders = np.empty(0, dtype=np.int32)
        losses["channel_mismatch"] += others_copies - ticks.size

        order = np.lexsort((senders, ticks))
        ticks, senders = ticks[order], senders[order]

        starts_r = chains[r].starts
        idx = np.searchsorted(starts_r, ticks, side="right") - 1
        etype = chains[r].states[idx]
        offset = ticks - starts_r[idx]
        in_scan = etype == 1
        listening = in_scan & (offset < t_rx)
        losses["state_mismatch"] += int((~in_scan).sum())
        losses["scan_blind"] += int((in_scan & ~listening).sum())

        ticks, senders = ticks[listening], senders[listening]
        if config.link is not None:
            values = base_rssi[r][senders]
            if sigma > 0:
                values = values + sigma * shadow_rng(
                    config.seed, r).standard_normal(values.size)
            received = values >= sensitivity
            losses["out_of_range"] += int((~received).sum())
            ticks, senders, values = ticks[received], senders[received], values[received]
        else:
            values = np.full(ticks.size, np.nan)

        unique_ticks, first_idx, counts = np.unique(ticks, return_index=True,
                                                    return_counts=True)
        single = counts == 1
        collided = int(counts[~single].sum())
        collisions += collided
        losses["collision"] += collided
        rx_ticks = unique_ticks[single]
        rx_senders = senders[first_idx[single]]
        rx_values = values[first_idx[single]]

        records = np.empty(rx_ticks.size, dtype=RECEPTION_DTYPE)
        records["time_ms"] = rx_ticks
        records["receiver"] = r
        records["sender"] = rx_senders
        records["channel"] = ch_r + 1
        records["rssi_dbm"] = rx_values
        rx_records.append(records)

        window_idx = (rx_ticks // int(t_w)).astype(np.int64)
        counts_w = np.bincount(window_idx,
                               minlength=max(n_windows, 1))[:n_windows]
        per_window.append(counts_w.astype(np.int64))
        interarrival.append(np.diff(rx_ticks))

    receptions = np.concatenate(rx_records) if rx_records else np.empty(
        0, dtype=RECEPTION_DTYPE)
    order = np.lexsort((receptions["sender"], receptions["receiver"],
                        receptions["time_ms"]))
    receptions = receptions[order]

    return SimMetrics(
        receptions=receptions,
        collisions_observed=collisions,
        tx_count=tx_count,
        rx_count=int(receptions.size),
        network_event_count=int(n_events[2]),
        broadcast_event_count=int(n_events[0]),
        scan_event_count=int(n_events[1]),
        losses=losses,
        per_window_throughput=per_window,
        interarrival_ms=interarrival,
        state_time_ms=state_time,
        channel_beacons=channel_beacons,
        duration_ms=t_end,
        n_nodes=n,
        t_w=t_w,
    )
