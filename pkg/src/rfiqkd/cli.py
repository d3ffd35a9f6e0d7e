"""Command-line front end.

Four subcommands: ``simulate`` runs the Monte Carlo chain end to end and
writes the interval log, slice summary, report, and a summary block;
``analyze`` post-processes an existing log; ``sweep-loss`` and
``sweep-theta`` evaluate the rate-versus-loss and per-slice curves,
analytic by default.  Every command is a deterministic function of
(config, seed): same inputs, byte-identical outputs.

Exit codes: 0 success, 1 usage or configuration error, 2 data-format
error in an input file.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .analytic import (
    FREE_RUNNING,
    ORIGINAL_OPTIMAL,
    LossSweepPoint,
    cutoff_loss,
    sweep_loss,
    sweep_theta,
    uniform_slice_report,
    write_loss_sweep,
    write_theta_sweep,
)
from .config import (
    MODE_ANALYTIC,
    MODE_MONTECARLO,
    ConfigError,
    ScenarioConfig,
    apply_overrides,
    dump_config,
    load_config,
)
from .intervals import DataFormatError, read_log, simulate_intervals, write_log
from .keyrate import analyze_tallies, baseline_original_rfi, format_summary, write_report
from .protocol import ParameterError
from .slicing import accumulate, write_slice_summary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the documented code is 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="rfiqkd", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=str, default=None, help="scenario file")
    parser.add_argument("--seed", type=int, default=None, help="override run.seed")
    parser.add_argument("--out", type=str, default=None, help="override run.out_dir")
    parser.add_argument(
        "--mode",
        choices=(MODE_ANALYTIC, MODE_MONTECARLO),
        default=None,
        help="sweep evaluation mode (sweeps only)",
    )
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.FIELD=VALUE",
        help="override any config leaf, repeatable",
    )
    parser.add_argument(
        "--print-config",
        action="store_true",
        help="print the fully resolved configuration and exit",
    )
    sub = parser.add_subparsers(dest="command", required=False)
    sub.add_parser("simulate", help="run the Monte Carlo chain and write all outputs")
    analyze = sub.add_parser("analyze", help="post-process an existing interval log")
    analyze.add_argument("log", type=str, help="interval log to read")
    sub.add_parser("sweep-loss", help="average rate versus total loss")
    theta = sub.add_parser("sweep-theta", help="per-slice C and rate versus angle")
    theta.add_argument(
        "--log", type=str, default=None, help="also derive simulated columns from this log"
    )
    return parser


def _resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    config = load_config(args.config) if args.config else ScenarioConfig()
    overrides: dict[str, object] = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected SECTION.FIELD=VALUE")
        dotted, value = item.split("=", 1)
        overrides[dotted.strip()] = value.strip()
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.out is not None:
        overrides["run.out_dir"] = args.out
    if args.mode is not None:
        overrides["run.mode"] = args.mode
    if overrides:
        config = apply_overrides(config, overrides)
    return config


def _atomic(path: Path, write):
    """Write via a sibling temp file so failures leave no partial output."""
    tmp = path.with_name(path.name + ".tmp")
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _cmd_simulate(config: ScenarioConfig) -> int:
    out_dir = Path(config.run.out_dir)
    tallies = simulate_intervals(
        config.system, config.drift, config.run.duration_s, config.run.seed
    )
    result = accumulate(tallies, config.system.m_slices, smoothing=config.run.smoothing)
    report = analyze_tallies(
        tallies,
        config.system,
        config.security,
        m=config.system.m_slices,
        smoothing=config.run.smoothing,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic(out_dir / "intervals.csv", lambda p: write_log(tallies, p))
    _atomic(out_dir / "slices.csv", lambda p: write_slice_summary(result, p))
    _atomic(out_dir / "report.csv", lambda p: write_report(report, p))
    _atomic(
        out_dir / "summary.txt",
        lambda p: p.write_text(format_summary(report), encoding="utf-8"),
    )
    sys.stdout.write(format_summary(report))
    return EXIT_OK


def _cmd_analyze(config: ScenarioConfig, log_path: str) -> int:
    tallies = read_log(log_path)
    result = accumulate(tallies, config.system.m_slices, smoothing=config.run.smoothing)
    report = analyze_tallies(
        tallies,
        config.system,
        config.security,
        m=config.system.m_slices,
        smoothing=config.run.smoothing,
    )
    out_dir = Path(config.run.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic(out_dir / "slices.csv", lambda p: write_slice_summary(result, p))
    _atomic(out_dir / "report.csv", lambda p: write_report(report, p))
    _atomic(
        out_dir / "summary.txt",
        lambda p: p.write_text(format_summary(report), encoding="utf-8"),
    )
    sys.stdout.write(format_summary(report))
    return EXIT_OK


def _point_seed(master: int, index: int) -> int:
    """Deterministic per-grid-point seed, independent of execution order."""
    return int(np.random.SeedSequence(entropy=[master, index]).generate_state(1)[0])


def _sweep_loss_montecarlo(config: ScenarioConfig) -> list[LossSweepPoint]:
    """Full-simulation sweep for small pulse budgets.

    Each grid point simulates its own dataset of n_total pulses under
    the configured drift.  The unsliced baseline only ever sees the
    validity window pi/omega of data, mirroring the analytic cap.
    """
    from dataclasses import replace

    points = []
    index = 0
    for loss_db in config.sweep.loss_grid_db:
        system = replace(config.system, fiber_loss_db=loss_db, receiver_loss_db=0.0)
        for n_total in config.sweep.n_t_grid:
            duration = n_total / system.rep_rate
            seed = _point_seed(config.run.seed, index)
            index += 1
            tallies = simulate_intervals(system, config.drift, duration, seed)
            sliced = analyze_tallies(tallies, system, config.security)
            if system.omega > 0:
                cap = max(1, int(math.pi / system.omega / system.t_interval))
            else:
                cap = len(tallies)
            merged = baseline_original_rfi(tallies[:cap], system, config.security)
            points.append(
                LossSweepPoint(loss_db, n_total, FREE_RUNNING, sliced.average_rate_bps)
            )
            points.append(
                LossSweepPoint(loss_db, n_total, ORIGINAL_OPTIMAL, merged.average_rate_bps)
            )
    return points


def _cmd_sweep_loss(config: ScenarioConfig) -> int:
    if config.run.mode == MODE_MONTECARLO:
        points = _sweep_loss_montecarlo(config)
    else:
        points = sweep_loss(
            config.system,
            config.security,
            config.sweep.loss_grid_db,
            config.sweep.n_t_grid,
            m=config.system.m_slices,
        )
    out_dir = Path(config.run.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic(out_dir / "loss_sweep.csv", lambda p: write_loss_sweep(points, p))
    for scheme in (FREE_RUNNING, ORIGINAL_OPTIMAL):
        for n_total in config.sweep.n_t_grid:
            cutoff = cutoff_loss(points, scheme, n_total)
            shown = "none" if cutoff is None else repr(cutoff)
            sys.stdout.write(f"cutoff_db[{scheme}, n_total={n_total!r}]: {shown}\n")
    return EXIT_OK


def _cmd_sweep_theta(config: ScenarioConfig, log_path: str | None) -> int:
    out_dir = Path(config.run.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_total = config.system.n_total
    for m in config.sweep.m_grid:
        rows = sweep_theta(config.system, config.security, n_total, m)
        simulated = None
        if log_path is not None:
            tallies = read_log(log_path)
            sim_report = analyze_tallies(tallies, config.system, config.security, m=m)
            simulated = [(s.c_value, s.key_rate_bps) for s in sim_report.slices]
        name = "theta_sweep.csv" if len(config.sweep.m_grid) == 1 else f"theta_sweep_m{m}.csv"
        _atomic(out_dir / name, lambda p, r=rows, s=simulated: write_theta_sweep(r, p, s))
        for row in rows:
            sys.stdout.write(
                f"m={m} slice={row.slice_index} c={row.c_value!r} "
                f"rate_bps={row.key_rate_bps!r}\n"
            )
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
    except (ConfigError, ParameterError, OSError) as exc:
        sys.stderr.write(f"rfiqkd: config error: {exc}\n")
        return EXIT_USAGE
    if args.print_config:
        sys.stdout.write(dump_config(config))
        return EXIT_OK
    if args.command is None:
        sys.stderr.write("rfiqkd: error: a command is required unless --print-config is given\n")
        return EXIT_USAGE
    try:
        if args.command == "simulate":
            return _cmd_simulate(config)
        if args.command == "analyze":
            return _cmd_analyze(config, args.log)
        if args.command == "sweep-loss":
            return _cmd_sweep_loss(config)
        if args.command == "sweep-theta":
            return _cmd_sweep_theta(config, args.log)
    except DataFormatError as exc:
        sys.stderr.write(f"rfiqkd: data format error: {exc}\n")
        return EXIT_DATA
    except (ConfigError, ParameterError) as exc:
        sys.stderr.write(f"rfiqkd: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"rfiqkd: i/o error: {exc}\n")
        return EXIT_USAGE
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
