"""Per-tick reference engine for the protocol simulation.

This engine advances every node one millisecond at a time, which lets
reception history feed back into the timeline: messages caught during a scan
stretch its blind processing tail, and a bounded transmit buffer can drop
beacon frames at broadcast-event setup. It is the authoritative but slower
counterpart of the vectorized engine in :mod:`beaconcast.sim`; both produce
statistically identical results on feedback-free configs.

The tick cycle is: (1) nodes whose event ended draw the next state and set
it up, (2) broadcasting nodes due this tick emit beacons, (3) each beacon is
classified at every other node (channel, state, blind window, range) and
surviving copies are delivered unless several overlap, (4) elapsed counters
advance, and a scan that just finished listening computes its processing
stretch from the messages it caught.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .link import rssi as link_rssi
from .model import State
from .sim import (
    LOSS_CATEGORIES,
    RECEPTION_DTYPE,
    SimConfig,
    SimMetrics,
    apply_tb_jitter,
    _distance_matrix,
    node_rng,
    processing_stretch,
    shadow_rng,
)


@dataclass
class NodeState:
    """Mutable per-node machine state between ticks."""

    index: int = 0               # position in the config's node list
    current_state: State = State.SCAN
    state_elapsed: int = 0       # ticks completed in the current event
    state_length: int = 0        # full event length in ticks
    event_start: int = 0         # absolute tick the current event began
    broadcast_channel_cursor: int = 0  # 1-based channel of the next beacon, 0 outside
    scan_blind_until: int = 0    # absolute tick when scan blindness ends
    pending_rx_count: int = 0    # messages caught in the current scan
    transitions_done: int = 0    # events begun so far
    beacon_schedule: list = field(default_factory=list)  # (offset, channel), time order
    schedule_pos: int = 0

    @property
    def finished_event(self) -> bool:
        return self.state_elapsed >= self.state_length


@dataclass
class TickResult:
    """Emissions and accounting for one tick."""

    transmissions: list      # (sender, channel) pairs
    receptions: list         # (receiver, sender, channel, rssi_dbm)
    losses: dict             # per-category pair losses this tick
    dropped_frames: int      # beacons cut by a bounded tx buffer this tick


def _begin_event(config: SimConfig, node: NodeState, t: int,
                 rng: np.random.Generator) -> int:
    """Draw and set up the next event; returns frames dropped at setup."""
    p = config.protocol
    sel = config.selection_for(node.index)
    u = rng.random()
    if u < sel.rho_b:
        state = State.BROADCAST
    elif u < sel.rho_b + sel.rho_s:
        state = State.SCAN
    else:
        state = State.NETWORKING
    node.current_state = state
    node.state_elapsed = 0
    node.event_start = t
    node.transitions_done += 1
    node.pending_rx_count = 0
    node.scan_blind_until = 0
    node.beacon_schedule = []
    node.schedule_pos = 0
    node.broadcast_channel_cursor = 0
    dropped = 0
    if state is State.BROADCAST:
        length = apply_tb_jitter(p.t_b, config.imperfections.tb_jitter, rng)
        if config.beacon_phase == "cyclic":
            shift = int(rng.random() * length)
        else:
            shift = 0
        schedule = sorted(
            (((c * length) // p.n_channels + shift) % length, c + 1)
            for c in range(p.n_channels))
        cap = config.imperfections.tx_buffer_frames
        if cap is not None and cap < len(schedule):
            dropped = len(schedule) - cap
            schedule = schedule[:cap]
        node.beacon_schedule = schedule
        node.broadcast_channel_cursor = schedule[0][1] if schedule else 0
        node.state_length = length
    elif state is State.SCAN:
        node.state_length = int(p.t_rx + p.t_comp_base)
        node.scan_blind_until = t + node.state_length
    else:
        node.state_length = int(p.t_n)
    return dropped


def step(config: SimConfig, nodes: Sequence[NodeState], t: int,
         rngs: Sequence[np.random.Generator],
         shadow_rngs: Optional[Sequence[np.random.Generator]] = None,
         base_rssi: Optional[np.ndarray] = None) -> TickResult:
    """Advance all nodes by exactly one tick.

    Mutates ``nodes`` in place and returns the tick's emissions. Pure given
    the draw sequences of ``rngs`` (one behavior stream per node) and
    ``shadow_rngs`` (one noise stream per node, used only with a shadowing
    link). ``base_rssi`` may carry the precomputed no-noise RSSI matrix;
    it is derived from config positions when absent.
    """
    p = config.protocol
    t_rx = int(p.t_rx)
    losses = {name: 0 for name in LOSS_CATEGORIES}
    dropped = 0

    for i, node in enumerate(nodes):
        if node.finished_event:
            dropped += _begin_event(config, node, t, rngs[i])

    transmissions = []
    for i, node in enumerate(nodes):
        if node.current_state is State.BROADCAST:
            sched = node.beacon_schedule
            pos = node.schedule_pos
            # offsets are distinct, so at most one beacon per node per tick
            if pos < len(sched) and sched[pos][0] == node.state_elapsed:
                transmissions.append((i, sched[pos][1]))
                node.schedule_pos = pos + 1
                node.broadcast_channel_cursor = (
                    sched[pos + 1][1] if pos + 1 < len(sched) else 0)

    if config.link is not None and base_rssi is None:
        distances = _distance_matrix(config.positions)
        base_rssi = np.full((len(nodes), len(nodes)), np.nan)
        for r in range(len(nodes)):
            for s in range(len(nodes)):
                if r != s:
                    base_rssi[r, s] = link_rssi(config.link, distances[r, s])

    receptions = []
    if transmissions:
        candidates = {}  # receiver -> list of (sender, channel, rssi)
        for sender, channel in transmissions:
            for r, node in enumerate(nodes):
                if r == sender:
                    continue
                if config.scan_channels[r] != channel:
                    losses["channel_mismatch"] += 1
                    continue
                if node.current_state is not State.SCAN:
                    losses["state_mismatch"] += 1
                    continue
                if node.state_elapsed >= t_rx:
                    losses["scan_blind"] += 1
                    continue
                value = np.nan
                if config.link is not None:
                    value = base_rssi[r, sender]
                    sigma = config.link.shadowing_sigma
                    if sigma > 0:
                        value += sigma * shadow_rngs[r].standard_normal()
                    if value < config.link.sensitivity:
                        losses["out_of_range"] += 1
                        continue
                candidates.setdefault(r, []).append((sender, channel, value))
        for r, frames in candidates.items():
            if len(frames) == 1:
                sender, channel, value = frames[0]
                receptions.append((r, sender, channel, value))
                nodes[r].pending_rx_count += 1
            else:
                losses["collision"] += len(frames)

    for node in nodes:
        node.state_elapsed += 1
        if (node.current_state is State.SCAN and node.state_elapsed == t_rx):
            # listening just ended: blind tail grows with the catch
            tail = processing_stretch(p.t_comp_base, node.pending_rx_count,
                                      config.imperfections.proc_cost_per_msg)
            node.state_length = t_rx + int(round(tail))
            node.scan_blind_until = node.event_start + node.state_length

    return TickResult(transmissions=transmissions, receptions=receptions,
                      losses=losses, dropped_frames=dropped)


class TickEngine:
    """Runs a config on the per-tick engine and collects SimMetrics."""

    def __init__(self, config: SimConfig) -> None:
        self.config = config
        self.nodes = [NodeState(index=i) for i in range(config.n_nodes)]
        self.rngs = [node_rng(config.seed, i) for i in range(config.n_nodes)]
        self.shadow_rngs = [shadow_rng(config.seed, i)
                            for i in range(config.n_nodes)]
        self.base_rssi: Optional[np.ndarray] = None
        if config.link is not None:
            distances = _distance_matrix(config.positions)
            n = config.n_nodes
            self.base_rssi = np.full((n, n), np.nan)
            for r in range(n):
                for s in range(n):
                    if r != s:
                        self.base_rssi[r, s] = link_rssi(config.link,
                                                         distances[r, s])

    def run(self) -> SimMetrics:
        config = self.config
        p = config.protocol
        n = config.n_nodes
        budget = config.transitions_per_node
        nodes = self.nodes
        losses = {name: 0 for name in LOSS_CATEGORIES}
        rx_rows = []
        tx_count = 0
        dropped = 0
        channel_beacons = np.zeros(p.n_channels, dtype=np.int64)
        state_time = np.zeros(3, dtype=np.int64)
        n_events = np.zeros(3, dtype=np.int64)
        t = 0
        while True:
            stop = any(node.finished_event and node.transitions_done >= budget
                       for node in nodes)
            if stop:
                break
            result = step(config, nodes, t, self.rngs, self.shadow_rngs,
                          self.base_rssi)
            for sender, channel in result.transmissions:
                channel_beacons[channel - 1] += 1
            tx_count += len(result.transmissions)
            dropped += result.dropped_frames
            for name, count in result.losses.items():
                losses[name] += count
            for r, sender, channel, value in result.receptions:
                rx_rows.append((t, r, sender, channel, value))
            for node in nodes:
                state_time[int(node.current_state)] += 1
                if node.state_elapsed == 1:  # event began this tick
                    n_events[int(node.current_state)] += 1
            t += 1
        t_end = t

        receptions = np.array(rx_rows, dtype=RECEPTION_DTYPE) if rx_rows \
            else np.empty(0, dtype=RECEPTION_DTYPE)
        order = np.lexsort((receptions["sender"], receptions["receiver"],
                            receptions["time_ms"]))
        receptions = receptions[order]

        t_w = config.window.t_w
        n_windows = int(t_end // t_w)
        per_window = []
        interarrival = []
        for r in range(n):
            ticks = receptions["time_ms"][receptions["receiver"] == r]
            window_idx = (ticks // int(t_w)).astype(np.int64)
            counts_w = np.bincount(window_idx,
                                   minlength=max(n_windows, 1))[:n_windows]
            per_window.append(counts_w.astype(np.int64))
            interarrival.append(np.diff(ticks))

        return SimMetrics(
            receptions=receptions,
            collisions_observed=losses["collision"],
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
            tx_dropped=dropped,
        )
