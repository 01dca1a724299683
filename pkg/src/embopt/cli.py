"""Command-line entry point: run scenarios, sweep parameters, query the optimum.

Exit codes: 0 success, 2 configuration/validation failure, 3 divergence,
4 I/O failure while writing artifacts.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import ConfigError, apply_overrides, build_scenario, load_raw
from .costs import CostSet, global_gradient, minimize_global
from .sim import (SimulationDiverged, _atomic_write_text, metrics, pe_monitor,
                  run, write_trajectory_csv)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4

SWEEP_PARAMETERS = ("epsilon", "sigma", "lambda_gain", "step")

SWEEP_COLUMNS = ("parameter", "value", "status", "detail", "final_gap_max",
                 "consensus_spread", "tracking_error_max", "param_error_max",
                 "lambda_drift_max")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help="bundled scenario name or path to a YAML file")
    common.add_argument("--variant", choices=("online", "offline", "sigma_mod"),
                        help="override the controller variant")
    common.add_argument("--epsilon", type=float,
                        help="override the high-gain scaling epsilon")
    common.add_argument("--sigma", type=float,
                        help="override the sigma_mod leak rate")
    common.add_argument("--step", type=float,
                        help="override the integration step")
    common.add_argument("--t-end", dest="t_end", type=float,
                        help="override the simulation horizon")

    parser = argparse.ArgumentParser(
        prog="embopt",
        description="Distributed-optimization control simulator: consensus "
                    "signal generators with adaptive high-gain tracking.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common],
                           help="run one scenario and write its artifacts")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--plots", action="store_true",
                       help="also render the standard figures")

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="run one scenario across parameter values")
    p_sweep.add_argument("--out", default="out", help="output directory")
    p_sweep.add_argument("--parameter", required=True,
                         choices=SWEEP_PARAMETERS,
                         help="which scalar to sweep")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values (empty for none)")

    sub.add_parser("optimum", parents=[common],
                   help="print the global optimum and per-agent gradients")
    sub.add_parser("validate", parents=[common],
                   help="parse and validate a scenario, then exit")
    return parser


def _overrides(args) -> dict:
    out = {}
    for key in ("variant", "epsilon", "sigma", "step", "t_end"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _load(args):
    raw = load_raw(args.scenario)
    raw = apply_overrides(raw, **_overrides(args))
    return raw, build_scenario(raw)


def cmd_run(args) -> int:
    try:
        _, scenario = _load(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        trajectory = run(scenario)
    except SimulationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    try:
        os.makedirs(args.out, exist_ok=True)
        write_trajectory_csv(trajectory,
                             os.path.join(args.out, "trajectory.csv"))
        summary = metrics(trajectory)
        _atomic_write_text(os.path.join(args.out, "metrics.txt"),
                           summary.to_lines())
        try:
            report_lines = pe_monitor(trajectory, scenario).to_lines()
        except ValueError as exc:
            report_lines = [f"not computed: {exc}"]
        _atomic_write_text(os.path.join(args.out, "pe_report.txt"),
                           report_lines)
        if args.plots:
            from .plots import render_run_plots
            render_run_plots(trajectory, args.out)
    except OSError as exc:
        print(f"error: failed to write artifacts: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"scenario {scenario.name!r}: y_star = {trajectory.y_star:.6f}, "
          f"final gap max = {summary.final_gap_max:.6g}, "
          f"artifacts in {args.out}")
    return EXIT_OK


def _parse_values(text: str) -> list:
    items = [chunk.strip() for chunk in text.split(",")]
    return [float(chunk) for chunk in items if chunk]


def _sweep_cell(payload) -> dict:
    """Run one sweep cell from a raw config dict; never raises."""
    raw, parameter, value = payload
    row = {"parameter": parameter, "value": repr(value), "status": "ok",
           "detail": "", "final_gap_max": "", "consensus_spread": "",
           "tracking_error_max": "", "param_error_max": "",
           "lambda_drift_max": "", "metrics_lines": None}
    try:
        cell_raw = apply_overrides(raw, **{parameter: value})
        scenario = build_scenario(cell_raw)
        trajectory = run(scenario)
        summary = metrics(trajectory)
    except ConfigError as exc:
        row["status"] = "error"
        row["detail"] = str(exc)
        return row
    except SimulationDiverged as exc:
        row["status"] = "diverged"
        row["detail"] = str(exc)
        return row
    row["final_gap_max"] = repr(summary.final_gap_max)
    row["consensus_spread"] = repr(summary.consensus_spread_final)
    row["tracking_error_max"] = repr(summary.tracking_error_final_max)
    row["param_error_max"] = repr(summary.param_error_final_max)
    row["lambda_drift_max"] = repr(summary.lambda_drift_max)
    row["metrics_lines"] = summary.to_lines()
    return row


def _worker_cap(n_cells: int):
    raw = os.environ.get("SIM_THREADS")
    if raw is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"SIM_THREADS must be an integer, got {raw!r}")
        if cap < 1:
            raise ConfigError("SIM_THREADS must be at least 1")
    return max(1, min(cap, n_cells))


def cmd_sweep(args) -> int:
    try:
        values = _parse_values(args.values)
    except ValueError as exc:
        print(f"error: --values: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        raw = load_raw(args.scenario)
        raw = apply_overrides(raw, **_overrides(args))
        build_scenario(raw)  # validate the base scenario before any cell runs
        workers = _worker_cap(len(values))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    payloads = [(raw, args.parameter, v) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, payloads))
    else:
        rows = [_sweep_cell(p) for p in payloads]
    try:
        os.makedirs(args.out, exist_ok=True)
        for value, row in zip(values, rows):
            if row["metrics_lines"] is not None:
                cell_dir = os.path.join(args.out,
                                        f"{args.parameter}_{value:g}")
                os.makedirs(cell_dir, exist_ok=True)
                _atomic_write_text(os.path.join(cell_dir, "metrics.txt"),
                                   row["metrics_lines"])
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([row[c] for c in SWEEP_COLUMNS])
        _atomic_write_text(os.path.join(args.out, "sweep.csv"),
                           buffer.getvalue().splitlines())
    except OSError as exc:
        print(f"error: failed to write artifacts: {exc}", file=sys.stderr)
        return EXIT_IO
    failed = sum(1 for row in rows if row["status"] != "ok")
    print(f"sweep over {args.parameter}: {len(rows)} cell(s), "
          f"{failed} failed; table in {os.path.join(args.out, 'sweep.csv')}")
    return EXIT_OK


def cmd_optimum(args) -> int:
    try:
        raw = load_raw(args.scenario)
        costs_raw = raw.get("costs")
        if costs_raw is None:
            raise ConfigError("costs: section is missing")
        from .config import _build_costs
        costs = _build_costs(costs_raw, len(costs_raw))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        y_star = minimize_global(costs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"y_star = {y_star!r}")
    print(f"global_gradient = {global_gradient(costs, y_star)!r}")
    for i, cost in enumerate(costs):
        print(f"grad_agent_{i + 1} = {float(cost.grad(y_star))!r}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        _, scenario = _load(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"ok: scenario {scenario.name!r} with {scenario.n_agents} agent(s), "
          f"state dimension {scenario.layout.dim}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "sweep":
        return cmd_sweep(args)
    if args.command == "optimum":
        return cmd_optimum(args)
    return cmd_validate(args)


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
