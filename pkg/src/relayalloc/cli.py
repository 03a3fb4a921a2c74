"""Command-line front end: one-shot solves and Monte Carlo experiments.

Exit codes: 0 success, 1 malformed input or configuration, 2 solver
non-convergence (a best-effort report is still printed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .dualsolve import NonConvergenceError, SolverSettings, solve
from .figures import render_report_figures
from .model import Allocation, ChannelRealization, ProtocolKind, RelayAided
from .simkit import CellResult, ExperimentConfig, GeometryConfig, run_experiment


class InputFileError(ValueError):
    """Malformed channel/config file; remembers the offending line."""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


def _fmt(value: float) -> str:
    return f"{value:.17g}"


# ---------------------------------------------------------------------------
# channel files

def parse_channel_file(path: str) -> ChannelRealization:
    """Read the plain-text channel format.

    Header lines `K <int>` and `U <int>`, then blocks `g_sr` (one row of
    K gains), `g_su` and `g_ru` (U rows of K gains each), in that order.
    Blank lines and `#` comments are ignored.
    """
    with open(path, encoding="utf-8") as handle:
        lines = handle.readlines()

    tokens = []  # (line_no, list of fields)
    for i, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            tokens.append((i, text.split()))

    def take(what):
        if not tokens:
            raise InputFileError(path, len(lines) + 1, f"unexpected end of file, expected {what}")
        return tokens.pop(0)

    def expect_scalar(keyword):
        line_no, fields = take(f"'{keyword} <int>'")
        if len(fields) != 2 or fields[0] != keyword:
            raise InputFileError(path, line_no, f"expected '{keyword} <int>', got {' '.join(fields)!r}")
        try:
            value = int(fields[1])
        except ValueError:
            raise InputFileError(path, line_no, f"{keyword} must be an integer, got {fields[1]!r}")
        if value < 1:
            raise InputFileError(path, line_no, f"{keyword} must be >= 1, got {value}")
        return value

    def expect_label(label):
        line_no, fields = take(f"'{label}' block")
        if fields != [label]:
            raise InputFileError(path, line_no, f"expected block label {label!r}, got {' '.join(fields)!r}")

    def expect_row(num_k, context):
        line_no, fields = take(f"a row of {num_k} gains ({context})")
        if len(fields) != num_k:
            raise InputFileError(
                path, line_no, f"{context}: expected {num_k} values, got {len(fields)}"
            )
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise InputFileError(path, line_no, f"{context}: non-numeric gain value")
        if any(not np.isfinite(v) or v < 0 for v in row):
            raise InputFileError(path, line_no, f"{context}: gains must be finite and >= 0")
        return row

    num_k = expect_scalar("K")
    num_u = expect_scalar("U")
    expect_label("g_sr")
    g_sr = expect_row(num_k, "g_sr")
    expect_label("g_su")
    g_su = [expect_row(num_k, f"g_su user {u + 1}") for u in range(num_u)]
    expect_label("g_ru")
    g_ru = [expect_row(num_k, f"g_ru user {u + 1}") for u in range(num_u)]
    if tokens:
        line_no, fields = tokens[0]
        raise InputFileError(path, line_no, f"unexpected trailing content: {' '.join(fields)!r}")
    return ChannelRealization(g_sr=np.array(g_sr), g_su=np.array(g_su), g_ru=np.array(g_ru))


def write_channel_file(channel: ChannelRealization, path: str):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"K {channel.num_subcarriers}\n")
        handle.write(f"U {channel.num_users}\n")
        handle.write("g_sr\n")
        handle.write(" ".join(_fmt(v) for v in channel.g_sr) + "\n")
        for label, matrix in (("g_su", channel.g_su), ("g_ru", channel.g_ru)):
            handle.write(label + "\n")
            for row in matrix:
                handle.write(" ".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# experiment config files

_GEOMETRY_KEYS = {
    "geometry.source_x", "geometry.source_y",
    "geometry.relay_x", "geometry.relay_y",
    "geometry.center_x", "geometry.center_y",
    "geometry.radius", "geometry.path_loss_exponent",
    "geometry.num_taps", "geometry.reference_gain",
}
_SCALAR_KEYS = {
    "seed", "users", "realizations", "workers",
    "solver.epsilon", "solver.max_bisection_iters", "solver.bracket_growth",
}
_LIST_KEYS = {"subcarriers", "snr_db", "protocols"}
_ALL_KEYS = _GEOMETRY_KEYS | _SCALAR_KEYS | _LIST_KEYS


def parse_config_file(path: str) -> dict:
    """Flat `key = value` file with dotted keys; returns raw string values."""
    raw = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise InputFileError(path, line_no, f"expected 'key = value', got {text!r}")
            key, value = (part.strip() for part in text.split("=", 1))
            if key not in _ALL_KEYS:
                raise InputFileError(path, line_no, f"unknown key {key!r}")
            if key in raw:
                raise InputFileError(path, line_no, f"duplicate key {key!r}")
            raw[key] = value
    return raw


def parse_protocols(value: str) -> tuple[ProtocolKind, ...]:
    names = value.split()
    if names == ["both"]:
        return (ProtocolKind.NOVEL, ProtocolKind.BENCHMARK)
    try:
        return tuple(ProtocolKind(name) for name in names)
    except ValueError:
        raise ValueError(f"protocols must be novel|benchmark|both, got {value!r}")


def build_experiment_config(raw: dict, overrides: dict | None = None) -> tuple[ExperimentConfig, int]:
    """Resolve raw config + CLI overrides into a full ExperimentConfig.

    Returns (config, workers).
    """
    values = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    def get(key, default):
        return values.get(key, default)

    geometry = GeometryConfig(
        source_position=(float(get("geometry.source_x", 0.0)), float(get("geometry.source_y", 0.0))),
        relay_position=(float(get("geometry.relay_x", 50.0)), float(get("geometry.relay_y", 0.0))),
        user_region_center=(float(get("geometry.center_x", 100.0)), float(get("geometry.center_y", 0.0))),
        user_region_radius=float(get("geometry.radius", 50.0)),
        path_loss_exponent=float(get("geometry.path_loss_exponent", 3.0)),
        num_taps=int(get("geometry.num_taps", 4)),
        reference_gain=float(get("geometry.reference_gain", 1e6)),
    )
    epsilon = values.get("solver.epsilon")
    solver = SolverSettings(
        p_tot=1.0,  # placeholder; each cell substitutes its own budget
        epsilon=float(epsilon) if epsilon not in (None, "") else None,
        max_bisection_iters=int(get("solver.max_bisection_iters", 200)),
        bracket_growth=float(get("solver.bracket_growth", 2.0)),
    )
    protocols_value = get("protocols", "both")
    protocols = (
        parse_protocols(protocols_value) if isinstance(protocols_value, str) else tuple(protocols_value)
    )
    subcarriers = get("subcarriers", "32")
    budgets = get("snr_db", "15 20 25")
    config = ExperimentConfig(
        geometry=geometry,
        num_subcarriers=tuple(int(v) for v in str(subcarriers).split()),
        num_users=int(get("users", 5)),
        snr_budget_db=tuple(float(v) for v in str(budgets).split()),
        num_realizations=int(get("realizations", 500)),
        protocols=protocols,
        seed=int(get("seed", 0)),
        solver=solver,
    )
    workers = int(get("workers", 1))
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return config, workers


def resolved_config_dict(config: ExperimentConfig, workers: int) -> dict:
    """Fully resolved flat key/value view of a config (manifest payload)."""
    geo = config.geometry
    return {
        "seed": config.seed,
        "subcarriers": " ".join(str(k) for k in config.num_subcarriers),
        "users": config.num_users,
        "snr_db": " ".join(f"{s:g}" for s in config.snr_budget_db),
        "realizations": config.num_realizations,
        "protocols": " ".join(p.value for p in config.protocols),
        "workers": workers,
        "geometry.source_x": geo.source_position[0],
        "geometry.source_y": geo.source_position[1],
        "geometry.relay_x": geo.relay_position[0],
        "geometry.relay_y": geo.relay_position[1],
        "geometry.center_x": geo.user_region_center[0],
        "geometry.center_y": geo.user_region_center[1],
        "geometry.radius": geo.user_region_radius,
        "geometry.path_loss_exponent": geo.path_loss_exponent,
        "geometry.num_taps": geo.num_taps,
        "geometry.reference_gain": geo.reference_gain,
        "solver.epsilon": "" if config.solver.epsilon is None else config.solver.epsilon,
        "solver.max_bisection_iters": config.solver.max_bisection_iters,
        "solver.bracket_growth": config.solver.bracket_growth,
    }


# ---------------------------------------------------------------------------
# solve command

def format_allocation(allocation: Allocation, protocol: ProtocolKind) -> str:
    """Human-readable allocation report, 1-based indices."""
    lines = [
        f"protocol: {protocol.value}",
        f"sum rate (bpos): {_fmt(allocation.sum_rate)}",
        f"total power: {_fmt(allocation.total_power)}",
        "pairs (1-based):",
    ]
    for d in sorted(allocation.decisions, key=lambda d: d.first_slot_subcarrier):
        k = d.first_slot_subcarrier + 1
        l = d.second_slot_subcarrier + 1
        if isinstance(d.mode, RelayAided):
            s = d.mode.split
            lines.append(
                f"  k={k} l={l} relay-aided user={d.mode.user + 1} "
                f"p_s1={_fmt(s.p_s1)} p_s2={_fmt(s.p_s2)} p_r={_fmt(s.p_r)}"
            )
        else:
            m = d.mode
            lines.append(
                f"  k={k} l={l} direct slot1(user={m.first_user + 1} p={_fmt(m.first_power)}) "
                f"slot2(user={m.second_user + 1} p={_fmt(m.second_power)})"
            )
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    try:
        channel = parse_channel_file(args.channel_file)
    except (OSError, InputFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        protocols = parse_protocols(args.protocol)
        settings = SolverSettings(
            p_tot=args.ptot, epsilon=args.epsilon, max_bisection_iters=args.max_iters
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    exit_code = 0
    reports = []
    for protocol in protocols:
        try:
            allocation = solve(channel, protocol, settings)
        except NonConvergenceError as exc:
            print(
                f"warning: {protocol.value}: {exc}; reporting best bracketing point",
                file=sys.stderr,
            )
            exit_code = 2
            if exc.best_point is None:
                continue
            allocation = exc.best_point.allocation
        reports.append(format_allocation(allocation, protocol))

    text = "\n".join(reports)
    if not args.quiet:
        print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    return exit_code


# ---------------------------------------------------------------------------
# experiment command

_SUMMARY_COLUMNS = (
    "K,snr_db,protocol,mean_rate_bpos,stderr,mean_ratio,stderr_ratio,realizations,nonconverged"
)


def _summary_rows(cell: CellResult) -> list[str]:
    ratio = cell.mean_ratio()
    ratio_err = cell.stderr_ratio()
    ratio_text = "" if ratio is None else _fmt(ratio)
    ratio_err_text = "" if ratio_err is None else _fmt(ratio_err)
    rows = []
    for protocol in cell.rates:
        rows.append(
            ",".join(
                [
                    str(cell.num_subcarriers),
                    f"{cell.snr_db:g}",
                    protocol.value,
                    _fmt(cell.mean_rate(protocol)),
                    _fmt(cell.stderr_rate(protocol)),
                    ratio_text,
                    ratio_err_text,
                    str(cell.realizations),
                    str(cell.nonconverged),
                ]
            )
        )
    return rows


def _write_cell_file(cell: CellResult, path: str):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("realization,protocol,rate_bpos\n")
        for protocol, values in cell.rates.items():
            for i, rate in enumerate(values, start=1):
                rate_text = "" if not np.isfinite(rate) else _fmt(rate)
                handle.write(f"{i},{protocol.value},{rate_text}\n")


def cmd_experiment(args) -> int:
    try:
        raw = parse_config_file(args.config_file)
        overrides = {
            "seed": args.seed,
            "protocols": args.protocol,
            "solver.epsilon": args.epsilon,
            "workers": args.workers,
        }
        config, workers = build_experiment_config(raw, overrides)
    except (OSError, InputFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir = args.out
    cells_dir = os.path.join(out_dir, "cells")
    os.makedirs(cells_dir, exist_ok=True)
    summary_path = os.path.join(out_dir, "summary.csv")
    manifest_path = os.path.join(out_dir, "manifest.json")

    cell_paths = {}
    for num_k in config.num_subcarriers:
        for snr_db in config.snr_budget_db:
            name = f"cell_K{num_k}_snr{snr_db:g}.csv"
            cell_paths[(num_k, snr_db)] = os.path.join("cells", name)

    manifest = {
        "tool": "relayalloc",
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "config": resolved_config_dict(config, workers),
        "outputs": {
            "summary": "summary.csv",
            "cells": {f"K{k}_snr{s:g}": p for (k, s), p in cell_paths.items()},
            "figures": [],
        },
    }

    def write_manifest():
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(manifest, handle, indent=2)
            handle.write("\n")

    write_manifest()

    summary = open(summary_path, "w", encoding="utf-8", newline="\n")
    summary.write(_SUMMARY_COLUMNS + "\n")
    summary.flush()

    def on_cell(cell: CellResult):
        for row in _summary_rows(cell):
            summary.write(row + "\n")
        summary.flush()
        rel_path = cell_paths[(cell.num_subcarriers, cell.snr_db)]
        _write_cell_file(cell, os.path.join(out_dir, rel_path))
        if not args.quiet:
            parts = [
                f"{p.value}={cell.mean_rate(p):.4f}" for p in cell.rates
            ]
            print(
                f"cell K={cell.num_subcarriers} snr={cell.snr_db:g} dB done: "
                + " ".join(parts)
                + (f" ratio={cell.mean_ratio():.4f}" if cell.mean_ratio() is not None else "")
            )

    try:
        report = run_experiment(config, workers=workers, cell_callback=on_cell)
    except ValueError as exc:  # e.g. an absolute epsilon incompatible with a cell budget
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        summary.close()

    if args.figures:
        figure_paths = render_report_figures(report, os.path.join(out_dir, "figures"))
        manifest["outputs"]["figures"] = [
            os.path.relpath(p, out_dir) for p in figure_paths
        ]
        write_manifest()
        if not args.quiet and figure_paths:
            print("figures: " + ", ".join(os.path.relpath(p, out_dir) for p in figure_paths))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relayalloc",
        description="Sum-rate optimal allocation for two-slot DF-relay OFDMA downlinks",
    )
    parser.add_argument("--version", action="version", version=f"relayalloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one channel file")
    p_solve.add_argument("channel_file", help="channel gain file")
    p_solve.add_argument("--ptot", type=float, required=True, help="total power budget (linear)")
    p_solve.add_argument(
        "--protocol", default="both", help="novel | benchmark | both (default both)"
    )
    p_solve.add_argument("--epsilon", type=float, default=None, help="absolute power tolerance")
    p_solve.add_argument("--max-iters", type=int, default=200, help="bisection iteration cap")
    p_solve.add_argument("--out", default=None, help="also write the report to this file")
    p_solve.add_argument("--quiet", action="store_true", help="suppress stdout report")
    p_solve.set_defaults(func=cmd_solve)

    p_exp = sub.add_parser("experiment", help="run a Monte Carlo sweep")
    p_exp.add_argument("config_file", help="flat key=value experiment config")
    p_exp.add_argument("--out", required=True, help="output directory")
    p_exp.add_argument("--seed", type=int, default=None, help="override config seed")
    p_exp.add_argument("--protocol", default=None, help="override config protocols")
    p_exp.add_argument("--epsilon", type=float, default=None, help="override solver epsilon")
    p_exp.add_argument("--workers", type=int, default=None, help="parallel workers (default 1)")
    p_exp.add_argument(
        "--no-figures", dest="figures", action="store_false", help="skip figure rendering"
    )
    p_exp.add_argument("--quiet", action="store_true", help="suppress progress output")
    p_exp.set_defaults(func=cmd_experiment, figures=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
