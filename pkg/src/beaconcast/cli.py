"""Command-line front end: one command per experiment.

``analyze`` prints the closed-form quantities, ``simulate`` runs one
scenario and writes its logs, ``sweep`` fans one scenario out over a
parameter axis, ``fit-pathloss`` estimates the path-loss exponent from a
measurement CSV, and ``codec`` converts position reports to and from
beacon SSID strings.

All commands are deterministic for a given config and seed. Files are
written atomically (temp file then rename) into the output directory from
``--out``, the ``BEACONCAST_OUT`` environment variable, or the working
directory. Exit codes: 0 success, 2 config or input error, 3 data
integrity error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .codec import BeaconPayload, PositionReport, decode, encode
from .errors import (
    BeaconcastError,
    CrcMismatchError,
    EmptyDataError,
    InsufficientDataError,
    InvalidParameterError,
)
from .link import LinkParams, fit_path_loss
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
from .sim import RECEPTION_DTYPE, Imperfections, SimConfig, SimMetrics, run
from .stats import (
    Histogram,
    InterarrivalFit,
    interarrival_fit,
    summarize_run,
    sweep_configs,
    throughput_pdf,
)

RECEPTION_HEADER = ("time_ms", "receiver", "sender", "channel", "rssi_dbm")
FIT_HEADER = ("distance_m", "rssi_dbm")

_CONFIG_KEYS = {
    "protocol", "shares", "selection", "nodes", "transitions", "seed",
    "scan_channels", "window_ms", "positions", "link", "imperfections",
    "beacon_phase", "out_dir", "format", "k_list", "axis", "values", "jobs",
}
_PROTOCOL_KEYS = {"t_b", "t_s", "t_n", "t_beacon", "n_channels",
                  "t_comp_base"}
_LINK_KEYS = {"p_t", "k_loss", "d0", "gamma", "shadowing_sigma",
              "sensitivity"}
_IMPERFECTION_KEYS = {"tb_jitter", "proc_cost_per_msg", "tx_buffer_frames"}
_SHARE_KEYS = {"p_b", "p_s", "p_n"}
_SELECTION_KEYS = {"rho_b", "rho_s", "rho_n"}
_REPORT_KEYS = {f.name for f in
                PositionReport.__dataclass_fields__.values()}  # type: ignore


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one command needs, merged from file and flags."""

    kind: str
    sim: SimConfig
    out_dir: Path
    fmt: str = "json"
    k_list: tuple = (2,)
    axis: Optional[str] = None
    values: tuple = ()
    jobs: Optional[int] = None


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise InvalidParameterError(
                f"unknown config key {key!r} in {where}")


def _parse_protocol(raw: dict) -> ProtocolParams:
    _check_keys(raw, _PROTOCOL_KEYS, "protocol")
    return ProtocolParams.from_event_durations(**raw)


def _parse_link(raw: dict) -> LinkParams:
    _check_keys(raw, _LINK_KEYS, "link")
    return LinkParams(**raw)


def _parse_imperfections(raw: dict) -> Imperfections:
    _check_keys(raw, _IMPERFECTION_KEYS, "imperfections")
    if "tb_jitter" in raw and raw["tb_jitter"] is not None:
        raw = dict(raw, tb_jitter=tuple(raw["tb_jitter"]))
    return Imperfections(**raw)


def _parse_selection(cfg: dict, protocol: ProtocolParams) -> SelectionProbs:
    if "shares" in cfg and "selection" in cfg:
        raise InvalidParameterError(
            "give either 'shares' or 'selection', not both")
    if "selection" in cfg:
        _check_keys(cfg["selection"], _SELECTION_KEYS, "selection")
        return SelectionProbs(**cfg["selection"])
    raw = cfg.get("shares", {"p_b": 0.5, "p_s": 0.5, "p_n": 0.0})
    _check_keys(raw, _SHARE_KEYS, "shares")
    return selection_probs(StateShares(**raw), protocol)


def _build_sim_config(cfg: dict) -> SimConfig:
    protocol = _parse_protocol(cfg.get("protocol", {}))
    selection = _parse_selection(cfg, protocol)
    nodes = int(cfg.get("nodes", 2))
    transitions = int(cfg.get("transitions", 1_000_000))
    if transitions < 1:
        raise InvalidParameterError("transitions must be >= 1")
    kwargs = dict(
        protocol=protocol,
        selection=selection,
        n_nodes=nodes,
        scan_channels=cfg.get("scan_channels", 1),
        transitions_per_node=max(1, transitions // max(nodes, 1)),
        seed=int(cfg.get("seed", 0)),
        window=WindowSpec(t_w=float(cfg.get("window_ms", 1000.0))),
        imperfections=_parse_imperfections(cfg.get("imperfections", {})),
        beacon_phase=cfg.get("beacon_phase", "cyclic"),
    )
    if cfg.get("positions") is not None:
        kwargs["positions"] = np.array(cfg["positions"], dtype=float)
    if cfg.get("link") is not None:
        kwargs["link"] = _parse_link(cfg["link"])
    if isinstance(kwargs["scan_channels"], list):
        kwargs["scan_channels"] = tuple(kwargs["scan_channels"])
    return SimConfig(**kwargs)


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg: dict = {}
    if getattr(args, "config", None):
        text = Path(args.config).read_text()
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(
                f"config is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise InvalidParameterError("config must be a JSON object")
        _check_keys(cfg, _CONFIG_KEYS, "config")
    for name in ("seed", "nodes", "transitions", "axis", "jobs"):
        value = getattr(args, name, None)
        if value is not None:
            cfg[name] = value
    if getattr(args, "values", None) is not None:
        cfg["values"] = [float(v) for v in args.values.split(",")]
    if getattr(args, "format", None) is not None:
        cfg["format"] = args.format
    out = getattr(args, "out", None) or cfg.get("out_dir") \
        or os.environ.get("BEACONCAST_OUT") or "."
    fmt = cfg.get("format", "json")
    if fmt not in ("csv", "json"):
        raise InvalidParameterError("format must be 'csv' or 'json'")
    if getattr(args, "k_values", None):
        cfg["k_list"] = args.k_values
    k_list = tuple(int(k) for k in cfg.get("k_list", [2]))
    if any(k < 1 for k in k_list):
        raise InvalidParameterError("k_list entries must be >= 1")
    return ExperimentConfig(
        kind=args.command,
        sim=_build_sim_config(cfg),
        out_dir=Path(out),
        fmt=fmt,
        k_list=k_list,
        axis=cfg.get("axis"),
        values=tuple(cfg.get("values", ())),
        jobs=cfg.get("jobs"),
    )


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _write_json(path: Path, payload) -> None:
    _write_atomic(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(str(cell) for cell in row) for row in rows)
    _write_atomic(path, "\n".join(lines) + "\n")


def write_receptions(path: Path, receptions: np.ndarray) -> None:
    """Reception log as CSV with the canonical header."""
    rows = ((int(r["time_ms"]), int(r["receiver"]), int(r["sender"]),
             int(r["channel"]), repr(float(r["rssi_dbm"])))
            for r in receptions)
    _write_csv(path, RECEPTION_HEADER, rows)


def read_receptions(path) -> np.ndarray:
    """Parse a reception CSV written by this module."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RECEPTION_HEADER:
            raise InvalidParameterError(
                f"expected header {','.join(RECEPTION_HEADER)}")
        rows = [(int(r[0]), int(r[1]), int(r[2]), int(r[3]), float(r[4]))
                for r in reader if r]
    out = np.array(rows, dtype=RECEPTION_DTYPE) if rows \
        else np.empty(0, dtype=RECEPTION_DTYPE)
    return out


def _histogram_rows(h: Histogram):
    dens = h.values if h.normalization == "pdf" else None
    for i, count in enumerate(h.counts):
        left, right = h.bin_edges[i], h.bin_edges[i + 1]
        row = [repr(float(left)), repr(float(right)), int(count)]
        row.append(repr(float(dens[i])) if dens is not None else "")
        yield row


def cmd_analyze(config: ExperimentConfig) -> int:
    p = config.sim.protocol
    sel = config.sim.selection
    shares = steady_state_shares(sel, p)
    p_beacon = beacon_probability(shares, p)
    window = config.sim.window
    report = {
        "shares": {"p_b": shares.p_b, "p_s": shares.p_s, "p_n": shares.p_n},
        "selection": {"rho_b": sel.rho_b, "rho_s": sel.rho_s,
                      "rho_n": sel.rho_n},
        "p_beacon": p_beacon,
        "lambda_per_ms": interarrival_rate(p),
        "expected_events": {
            "broadcast": expected_events(shares, p, window, State.BROADCAST),
            "scan": expected_events(shares, p, window, State.SCAN),
            "networking": expected_events(shares, p, window,
                                          State.NETWORKING),
        },
        "per_k": [
            {"k": k,
             "p_collision": collision_probability(p_beacon, k),
             "p_success": success_probability(shares, p, k),
             "n_success": expected_successes(shares, p, window, k)}
            for k in config.k_list
        ],
    }
    print(f"shares: P_B={shares.p_b:.6f} P_S={shares.p_s:.6f} "
          f"P_N={shares.p_n:.6f}")
    print(f"selection: rho_B={sel.rho_b:.6f} rho_S={sel.rho_s:.6f} "
          f"rho_N={sel.rho_n:.6f}")
    print(f"p_beacon={p_beacon:.6f} lambda_per_ms="
          f"{report['lambda_per_ms']:.6f}")
    for entry in report["per_k"]:
        print(f"k={entry['k']}: p_collision={entry['p_collision']:.6f} "
              f"p_success={entry['p_success']:.6f} "
              f"n_success={entry['n_success']:.6f}")
    if config.fmt == "json":
        _write_json(config.out_dir / "analysis.json", report)
    else:
        rows = [["p_b", "", repr(shares.p_b)], ["p_s", "", repr(shares.p_s)],
                ["p_n", "", repr(shares.p_n)],
                ["rho_b", "", repr(sel.rho_b)], ["rho_s", "", repr(sel.rho_s)],
                ["rho_n", "", repr(sel.rho_n)],
                ["p_beacon", "", repr(p_beacon)],
                ["lambda_per_ms", "", repr(report["lambda_per_ms"])]]
        for state, value in report["expected_events"].items():
            rows.append([f"expected_{state}_events", "", repr(value)])
        for entry in report["per_k"]:
            for name in ("p_collision", "p_success", "n_success"):
                rows.append([name, entry["k"], repr(entry[name])])
        _write_csv(config.out_dir / "analysis.csv",
                   ("quantity", "k", "value"), rows)
    return 0


def _summary_payload(config: ExperimentConfig, m: SimMetrics) -> dict:
    pooled = np.concatenate(m.per_window_throughput) \
        if m.per_window_throughput else np.empty(0, dtype=np.int64)
    try:
        fit: Optional[InterarrivalFit] = interarrival_fit(m)
    except InsufficientDataError:
        fit = None
    shares = m.empirical_shares
    return {
        "collisions": int(m.collisions_observed),
        "duration_ms": int(m.duration_ms),
        "empirical_shares": {"broadcast": float(shares[0]),
                             "scan": float(shares[1]),
                             "networking": float(shares[2])},
        "events": {"broadcast": int(m.broadcast_event_count),
                   "scan": int(m.scan_event_count),
                   "networking": int(m.network_event_count)},
        "interarrival": None if fit is None else {
            "lambda_per_ms": fit.lambda_hat,
            "ks_statistic": fit.ks_statistic},
        "losses": {k: int(v) for k, v in m.losses.items()},
        "mean_throughput": m.mean_throughput,
        "n_nodes": m.n_nodes,
        "per_node_throughput": [float(v) for v in m.throughput_per_node],
        "rx_count": int(m.rx_count),
        "seed": config.sim.seed,
        "transitions_per_node": config.sim.transitions_per_node,
        "tx_count": int(m.tx_count),
        "tx_dropped": int(m.tx_dropped),
        "window_ms": float(m.t_w),
        "window_variance": float(pooled.var()) if pooled.size else None,
    }


def cmd_simulate(config: ExperimentConfig) -> int:
    m = run(config.sim)
    payload = _summary_payload(config, m)
    _write_json(config.out_dir / "summary.json", payload)
    write_receptions(config.out_dir / "receptions.csv", m.receptions)
    try:
        hist = throughput_pdf(m)
        _write_csv(config.out_dir / "throughput_hist.csv",
                   ("bin_left", "bin_right", "count", "density"),
                   _histogram_rows(hist))
    except (InsufficientDataError, EmptyDataError):
        pass  # short runs still get the summary and the raw log
    gaps = [g for g in m.interarrival_ms if len(g)]
    pooled = np.concatenate(gaps).astype(np.int64) if gaps \
        else np.empty(0, dtype=np.int64)
    counts = np.bincount(pooled) if pooled.size else np.empty(0, np.int64)
    _write_csv(config.out_dir / "interarrival_hist.csv",
               ("gap_ms", "count"),
               ((i, int(c)) for i, c in enumerate(counts)))
    print(f"mean_throughput={payload['mean_throughput']:.4f} msg/s "
          f"rx={payload['rx_count']} collisions={payload['collisions']} "
          f"duration_ms={payload['duration_ms']}")
    return 0


def _sweep_point(sim_config: SimConfig):
    return summarize_run(run(sim_config))


def cmd_sweep(config: ExperimentConfig) -> int:
    if config.axis is None or not config.values:
        raise InvalidParameterError("sweep needs 'axis' and 'values'")
    configs = sweep_configs(config.sim, config.axis, config.values)
    jobs = config.jobs if config.jobs is not None else os.cpu_count() or 1
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            summaries = list(pool.map(_sweep_point, configs))
    else:
        summaries = [_sweep_point(c) for c in configs]
    rows = []
    for value, s in zip(config.values, summaries):
        rows.append({"value": float(value),
                     "mean_throughput": s.mean_throughput,
                     "window_variance": s.variance,
                     "p_zero_window": s.p_zero_window,
                     "networking_rate": s.networking_rate})
        print(f"{config.axis}={value}: mean_throughput="
              f"{s.mean_throughput:.4f} window_variance={s.variance:.4f} "
              f"p_zero_window={s.p_zero_window:.4f} "
              f"networking_rate={s.networking_rate:.4f}")
    if config.fmt == "json":
        _write_json(config.out_dir / "sweep.json",
                    {"axis": config.axis, "points": rows})
    else:
        _write_csv(config.out_dir / "sweep.csv",
                   ("value", "mean_throughput", "window_variance",
                    "p_zero_window", "networking_rate"),
                   ([repr(r["value"]), repr(r["mean_throughput"]),
                     repr(r["window_variance"]), repr(r["p_zero_window"]),
                     repr(r["networking_rate"])] for r in rows))
    return 0


def _read_distance_rssi(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InsufficientDataError(
                f"empty CSV, expected header {','.join(FIT_HEADER)}")
        if tuple(h.strip() for h in header) != FIT_HEADER:
            raise InvalidParameterError(
                f"expected header {','.join(FIT_HEADER)}, "
                f"got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise InvalidParameterError(
                    f"row {lineno}: expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise InvalidParameterError(
                    f"row {lineno}: cannot parse {row!r} as numbers"
                ) from None
    if not rows:
        raise InsufficientDataError("CSV has a header but no data rows")
    return np.array(rows, dtype=float)


def cmd_fit_pathloss(args: argparse.Namespace) -> int:
    samples = _read_distance_rssi(args.csv)
    fit = fit_path_loss(samples, p_t=args.p_t, k_loss=args.k_loss, d0=args.d0)
    print(f"gamma_hat={fit.gamma_hat:.6f} rmse_db={fit.rmse:.6f} "
          f"n_samples={samples.shape[0]}")
    out = Path(args.out or os.environ.get("BEACONCAST_OUT") or ".")
    _write_json(out / "pathloss_fit.json",
                {"gamma_hat": fit.gamma_hat, "rmse_db": fit.rmse,
                 "n_samples": int(samples.shape[0]),
                 "p_t": args.p_t, "k_loss": args.k_loss, "d0": args.d0})
    _write_csv(out / "residuals.csv",
               ("distance_m", "rssi_dbm", "residual_db"),
               ([repr(float(d)), repr(float(v)), repr(float(res))]
                for (d, v), res in zip(samples, fit.residuals)))
    return 0


def cmd_codec(args: argparse.Namespace) -> int:
    if args.direction == "encode":
        try:
            raw = json.loads(args.input)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(
                f"encode input is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise InvalidParameterError("encode input must be a JSON object")
        _check_keys(raw, _REPORT_KEYS, "report")
        report = PositionReport(**raw)
        print(encode(report).ssid_text)
    else:
        report = decode(BeaconPayload(ssid_text=args.input))
        fields = {name: getattr(report, name) for name in _REPORT_KEYS}
        print(json.dumps(fields, sort_keys=True, indent=2))
    return 0


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--out", help="output directory "
                     "(default $BEACONCAST_OUT or the working directory)")
    sub.add_argument("--seed", type=int, help="override the run seed")
    sub.add_argument("--nodes", type=int, help="override the node count")
    sub.add_argument("--transitions", type=int,
                     help="total state transitions, split over the nodes")
    sub.add_argument("--format", choices=("csv", "json"),
                     help="table output format (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beaconcast",
        description="Beacon-broadcast protocol experiments")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser(
        "analyze", help="closed-form model quantities")
    _add_common_flags(analyze)
    analyze.add_argument("--k", type=int, action="append", dest="k_values",
                         help="competing node count, repeatable")

    simulate = commands.add_parser("simulate", help="run one scenario")
    _add_common_flags(simulate)

    sweep = commands.add_parser("sweep", help="run one scenario per value")
    _add_common_flags(sweep)
    sweep.add_argument("--axis",
                       choices=("t_s", "t_b", "p_n", "n_nodes", "distance"))
    sweep.add_argument("--values", help="comma-separated sweep values")
    sweep.add_argument("--jobs", type=int,
                       help="parallel runs (default: available cores)")

    fit = commands.add_parser("fit-pathloss",
                              help="fit the path-loss exponent")
    fit.add_argument("csv", help=f"CSV with header {','.join(FIT_HEADER)}")
    fit.add_argument("--p-t", type=float, default=19.5, dest="p_t")
    fit.add_argument("--k-loss", type=float, default=3.55, dest="k_loss")
    fit.add_argument("--d0", type=float, default=0.0147)
    fit.add_argument("--out", help="output directory")

    codec = commands.add_parser("codec", help="SSID position codec")
    codec.add_argument("direction", choices=("encode", "decode"))
    codec.add_argument("input", help="JSON report (encode) or SSID (decode)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fit-pathloss":
            return cmd_fit_pathloss(args)
        if args.command == "codec":
            return cmd_codec(args)
        config = _load_config(args)
        if args.command == "analyze":
            return cmd_analyze(config)
        if args.command == "simulate":
            return cmd_simulate(config)
        return cmd_sweep(config)
    except CrcMismatchError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (BeaconcastError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
