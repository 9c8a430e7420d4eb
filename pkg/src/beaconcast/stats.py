"""Analysis of simulation output: histograms, fits, grids and sweeps.

All functions here are pure transformations of completed
:class:`~beaconcast.sim.SimMetrics` (or of freshly spawned runs for the grid
and sweep helpers). Nothing plots; every result is plain data ready for CSV
or JSON serialization.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats as sps

from .errors import EmptyDataError, InsufficientDataError, InvalidParameterError
from .model import (
    ProtocolParams,
    StateShares,
    WindowSpec,
    beacon_probability,
    collision_probability,
    selection_probs,
    steady_state_shares,
)
from .sim import SimConfig, SimMetrics, _NodeChain, run


@dataclass(frozen=True)
class Histogram:
    """Binned counts with a chosen normalization for serialization."""

    bin_edges: np.ndarray
    counts: np.ndarray
    normalization: str = "counts"  # "counts" or "pdf"

    def __post_init__(self) -> None:
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise InvalidParameterError("bin_edges must be strictly increasing")
        if counts.shape != (edges.size - 1,):
            raise InvalidParameterError("need exactly one count per bin")
        if np.any(counts < 0):
            raise InvalidParameterError("counts must be non-negative")
        if self.normalization not in ("counts", "pdf"):
            raise InvalidParameterError("normalization must be 'counts' or 'pdf'")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def values(self) -> np.ndarray:
        """Counts, or densities integrating to 1 when normalization is pdf."""
        if self.normalization == "counts":
            return self.counts.astype(float)
        total = self.counts.sum()
        if total == 0:
            return np.zeros_like(self.bin_edges[:-1])
        widths = np.diff(self.bin_edges)
        return self.counts / (total * widths)


def throughput_pdf(metrics: SimMetrics, w: Optional[WindowSpec] = None) -> Histogram:
    """Integer-binned distribution of per-window reception counts.

    Windows are non-overlapping, aligned to t=0 and pooled across all nodes;
    only windows fully inside the simulated horizon count. Defaults to the
    window the run was configured with.
    """
    t_w = metrics.t_w if w is None else w.t_w
    n_windows = int(metrics.duration_ms // t_w)
    if n_windows == 0:
        raise EmptyDataError("the run is shorter than one window")
    if n_windows * metrics.n_nodes < 100:
        raise InsufficientDataError(
            f"need at least 100 windows, run has {n_windows * metrics.n_nodes}")
    pooled = []
    for r in range(metrics.n_nodes):
        ticks = metrics.receptions["time_ms"][metrics.receptions["receiver"] == r]
        idx = (ticks // int(t_w)).astype(np.int64)
        pooled.append(np.bincount(idx, minlength=max(n_windows, 1))[:n_windows])
    counts_per_window = np.concatenate(pooled)
    top = int(counts_per_window.max())
    histogram = np.bincount(counts_per_window, minlength=top + 1)
    edges = np.arange(top + 2, dtype=float) - 0.5
    return Histogram(bin_edges=edges, counts=histogram, normalization="pdf")


class InterarrivalFit(NamedTuple):
    """Exponential fit of reception gaps."""

    lambda_hat: float     # per ms
    ks_statistic: float   # against Exponential(lambda_hat)


def interarrival_fit(metrics: SimMetrics) -> InterarrivalFit:
    """Maximum-likelihood exponential rate and KS distance of reception gaps.

    Gaps are pooled across receivers (each receiver's stream is differenced
    separately). The rate estimate is ``1 / mean(gaps)``; the KS statistic
    is computed against the fitted exponential on the full sample.
    """
    parts = [g for g in metrics.interarrival_ms if len(g)]
    gaps = np.concatenate(parts).astype(float) if parts else np.empty(0)
    if gaps.size < 100:
        raise InsufficientDataError(
            f"need at least 100 gaps, run has {gaps.size}")
    lambda_hat = 1.0 / gaps.mean()
    ks = sps.kstest(gaps, "expon", args=(0.0, 1.0 / lambda_hat)).statistic
    return InterarrivalFit(lambda_hat=float(lambda_hat), ks_statistic=float(ks))


@dataclass(frozen=True)
class CollisionGrid:
    """Analytic and simulated collision probability over (k, P_B)."""

    k_values: tuple
    p_b_values: tuple
    analytic: np.ndarray    # shape (len(k), len(p_b))
    simulated: np.ndarray


def collision_cdf_grid(k_values: Sequence[int], p_b_values: Sequence[float],
                       p: ProtocolParams, sim_budget: int,
                       seed: int = 0,
                       beacon_phase: str = "cyclic") -> CollisionGrid:
    """Collision probability surface, closed form next to simulation.

    For each grid point, ``sim_budget`` state transitions are split evenly
    over k nodes with shares ``(P_B, 1 - P_B, 0)``. The simulated value is
    transmitter-side: the fraction of transmitted beacons whose tick is hit
    by at least one other node's beacon on the same channel, which matches
    the closed form's k-1 competitors and stays defined at P_B of 0 and 1.
    One channel is sampled; all channels share the schedule statistics.
    """
    if not len(k_values) or not len(p_b_values):
        raise InvalidParameterError("k and P_B grids must be non-empty")
    if any(int(k) != k or k < 1 for k in k_values):
        raise InvalidParameterError("k values must be positive integers")
    if any(not 0.0 <= b <= 1.0 for b in p_b_values):
        raise InvalidParameterError("P_B values must lie in [0, 1]")
    analytic = np.zeros((len(k_values), len(p_b_values)))
    simulated = np.zeros_like(analytic)
    for ki, k in enumerate(k_values):
        for bi, p_b in enumerate(p_b_values):
            shares = StateShares(p_b, 1.0 - p_b, 0.0)
            analytic[ki, bi] = collision_probability(
                beacon_probability(shares, p), int(k))
            simulated[ki, bi] = _overlap_fraction(
                shares, p, int(k), sim_budget,
                seed + ki * len(p_b_values) + bi, beacon_phase)
    return CollisionGrid(k_values=tuple(int(k) for k in k_values),
                         p_b_values=tuple(float(b) for b in p_b_values),
                         analytic=analytic, simulated=simulated)


def _overlap_fraction(shares: StateShares, p: ProtocolParams, k: int,
                      sim_budget: int, seed: int, beacon_phase: str) -> float:
    if shares.p_b == 0.0 or k < 2:
        return 0.0
    config = SimConfig(protocol=p, selection=selection_probs(shares, p),
                       n_nodes=k, transitions_per_node=max(1, sim_budget // k),
                       seed=seed % 2**64, beacon_phase=beacon_phase)
    ticks_per_node = []
    ends = []
    for i in range(k):
        chain = _NodeChain(config, i)
        ticks_per_node.append(chain.beacon_ticks[:, 0])  # one sampled channel
        ends.append(chain.end)
    t_end = min(ends)
    ticks = []
    owners = []
    for i, col in enumerate(ticks_per_node):
        kept = col[col < t_end]
        ticks.append(kept)
        owners.append(np.full(kept.size, i, dtype=np.int32))
    ticks = np.concatenate(ticks)
    owners = np.concatenate(owners)
    if ticks.size == 0:
        return 0.0
    order = np.argsort(ticks, kind="stable")
    ticks = ticks[order]
    owners = owners[order]
    starts = np.flatnonzero(np.r_[True, ticks[1:] != ticks[:-1]])
    sizes = np.diff(np.r_[starts, ticks.size])
    # A copy collides when another node, not the same node's next event,
    # shares its tick.
    multi_owner = (np.minimum.reduceat(owners, starts)
                   != np.maximum.reduceat(owners, starts))
    overlapped = int(sizes[multi_owner].sum())
    return overlapped / ticks.size


@dataclass(frozen=True)
class PointSummary:
    """Per-sweep-value statistics of a run."""

    mean_throughput: float        # msg/s per node
    variance: float               # of per-window counts, pooled
    histogram: Histogram          # msgs per window
    p_zero_window: float          # fraction of windows with no message
    networking_rate: float        # networking events per node per second


@dataclass(frozen=True)
class SweepResult:
    """One summary per swept value."""

    parameter: str
    values: tuple
    summaries: tuple              # of PointSummary

    def __post_init__(self) -> None:
        if len(self.values) != len(self.summaries):
            raise InvalidParameterError("one summary per swept value required")


def summarize_run(metrics: SimMetrics) -> PointSummary:
    """Collapse one run into the sweep-point statistics."""
    pooled = np.concatenate(metrics.per_window_throughput) \
        if metrics.per_window_throughput else np.empty(0, dtype=np.int64)
    if pooled.size == 0:
        raise EmptyDataError("run has no complete windows")
    seconds = metrics.duration_ms / 1000.0
    return PointSummary(
        mean_throughput=metrics.mean_throughput,
        variance=float(pooled.var()),
        histogram=throughput_pdf(metrics),
        p_zero_window=float((pooled == 0).mean()),
        networking_rate=float(metrics.network_event_count
                              / metrics.n_nodes / seconds),
    )


SWEEP_AXES = ("t_s", "t_b", "p_n", "n_nodes", "distance")


def sweep_configs(base: SimConfig, axis: str, values: Sequence) -> list:
    """Configs for a sweep: one per value, target time shares held fixed.

    Duration axes rebuild the protocol and re-derive selection
    probabilities so the time shares of the base config are preserved.
    The ``p_n`` axis rescales the remaining share over broadcast and scan
    in the base proportion. The ``distance`` axis places two nodes on the
    x axis and requires a link model in the base config.
    """
    if axis not in SWEEP_AXES:
        raise InvalidParameterError(
            f"unknown sweep axis {axis!r}, expected one of {SWEEP_AXES}")
    if not len(values):
        raise InvalidParameterError("sweep needs at least one value")
    base_shares = steady_state_shares(base.selection, base.protocol)
    configs = []
    for value in values:
        if axis in ("t_s", "t_b"):
            p = base.protocol
            kwargs = dict(t_b=p.t_b, t_s=p.t_s, t_n=p.t_n, t_beacon=p.t_beacon,
                          n_channels=p.n_channels, t_comp_base=p.t_comp_base)
            kwargs[axis] = float(value)
            protocol = ProtocolParams.from_event_durations(**kwargs)
            configs.append(replace(
                base, protocol=protocol,
                selection=selection_probs(base_shares, protocol)))
        elif axis == "p_n":
            p_n = float(value)
            rest = base_shares.p_b + base_shares.p_s
            if rest == 0:
                raise InvalidParameterError(
                    "base config has no broadcast/scan share to rescale")
            scale = (1.0 - p_n) / rest
            shares = StateShares(base_shares.p_b * scale,
                                 base_shares.p_s * scale, p_n)
            configs.append(replace(
                base, selection=selection_probs(shares, base.protocol)))
        elif axis == "n_nodes":
            if base.positions is not None:
                raise InvalidParameterError(
                    "n_nodes sweep requires a position-free base config")
            if len(set(base.scan_channels)) != 1:
                raise InvalidParameterError(
                    "n_nodes sweep requires one common scan channel")
            configs.append(replace(base, n_nodes=int(value),
                                   scan_channels=base.scan_channels[0]))
        else:  # distance
            if base.link is None:
                raise InvalidParameterError("distance sweep requires a link model")
            d = float(value)
            positions = np.array([[0.0, 0.0, 0.0], [d, 0.0, 0.0]])
            configs.append(replace(base, n_nodes=2, positions=positions,
                                   scan_channels=base.scan_channels[:1] * 2))
    return configs


def run_sweep(base: SimConfig, axis: str, values: Sequence) -> SweepResult:
    """Run one simulation per value and summarize each."""
    configs = sweep_configs(base, axis, values)
    summaries = tuple(summarize_run(run(c)) for c in configs)
    return SweepResult(parameter=axis, values=tuple(values),
                       summaries=summaries)


def networking_tradeoff(configs: Sequence[SimConfig]) -> SweepResult:
    """Beacon throughput against networking rate over explicit configs.

    All configs must be identical apart from their selection probabilities;
    each is run and summarized, with the networking share as the value axis.
    """
    if not len(configs):
        raise InvalidParameterError("need at least one config")
    reference = configs[0]
    for c in configs[1:]:
        for name in SimConfig.__dataclass_fields__:
            if name == "selection":
                continue
            a, b = getattr(reference, name), getattr(c, name)
            same = np.array_equal(a, b) if isinstance(a, np.ndarray) else a == b
            if not same:
                raise InvalidParameterError(
                    "configs may differ only in selection probabilities, "
                    f"found a mismatch in {name!r}")
    values = tuple(
        steady_state_shares(c.selection, c.protocol).p_n for c in configs)
    summaries = tuple(summarize_run(run(c)) for c in configs)
    return SweepResult(parameter="p_n", values=values, summaries=summaries)


def throughput_vs_distance(runs: Sequence) -> list:
    """Distance table from completed runs: (distance, throughput, mean RSSI).

    ``runs`` holds (distance_m, SimMetrics) pairs, one run per distance.
    Mean RSSI averages over logged receptions and is NaN when nothing was
    received.
    """
    table = []
    for distance, metrics in runs:
        values = metrics.receptions["rssi_dbm"]
        mean_rssi = float(values.mean()) if values.size else float("nan")
        table.append((float(distance), metrics.mean_throughput, mean_rssi))
    return table
