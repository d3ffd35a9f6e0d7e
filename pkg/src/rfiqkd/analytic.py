"""Expectation-level (no Monte Carlo) evaluation of both schemes.

Counts are replaced by their exact expectations and interval totals by
fractional pulse budgets, then fed through the identical decoy and
key-rate chain used for sampled data.  This is the fast mode behind the
per-slice angle sweep and the rate-versus-loss curves: free-running
slicing assumes the drift dwells uniformly over the circle, while the
unsliced baseline is capped at its validity limit pi/omega with the
frame sweeping omega*t across the session.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .channel import SystemParams, span_expectation
from .keyrate import (
    KeyRateReport,
    report_from_accumulators,
)
from .protocol import ParameterError, SecurityParams
from .slicing import SliceAccumulator

TWO_PI = 2.0 * math.pi

LOSS_SWEEP_SCHEMA = "rfiqkd-loss-sweep-v1"
THETA_SWEEP_SCHEMA = "rfiqkd-theta-sweep-v1"

FREE_RUNNING = "free-running"
ORIGINAL_OPTIMAL = "original-optimal"


def expected_slice_accumulator(
    params: SystemParams,
    slice_idx: int,
    m: int,
    n_pulses: float,
    theta_lo: float,
    theta_hi: float,
) -> SliceAccumulator:
    """Accumulator holding exact expectations over one angle span.

    Cells are float expectations rather than sampled integers;
    ``n_intervals`` is the fractional interval budget implied by the
    pulse count.  The downstream chain accepts both representations.
    """
    if n_pulses <= 0:
        raise ParameterError(f"n_pulses must be > 0, got {n_pulses}")
    exp = span_expectation(params, theta_lo, theta_hi, n_pulses)
    n_intervals = n_pulses / (params.rep_rate * params.t_interval)
    return SliceAccumulator(
        slice_index=slice_idx,
        m=m,
        counts=exp.counts,
        errors=exp.errors,
        n_intervals=n_intervals,
    )


def uniform_slice_report(
    params: SystemParams,
    sec: SecurityParams,
    n_total: float,
    m: int | None = None,
    span_average: bool = True,
) -> KeyRateReport:
    """Free-running scheme on ``n_total`` pulses spread evenly over angle.

    Every slice receives 1/m of the pulse budget.  With ``span_average``
    its expectation is averaged across the slice's angular span, which
    is what merging sampled intervals produces; without it the slice is
    evaluated exactly at its representative angle, the idealized
    per-angle curve.
    """
    if m is None:
        m = params.m_slices
    if n_total <= 0:
        raise ParameterError(f"n_total must be > 0, got {n_total}")
    half = math.pi / m if span_average else 0.0
    slices = []
    for i in range(m):
        center = TWO_PI * i / m
        slices.append(
            expected_slice_accumulator(
                params, i, m, n_total / m, center - half, center + half
            )
        )
    duration = n_total / params.rep_rate
    return report_from_accumulators(slices, params, sec, duration)


def original_optimal_report(
    params: SystemParams,
    sec: SecurityParams,
    n_total: float,
    assume_static: bool = False,
) -> KeyRateReport:
    """Best case the unsliced scheme can claim from the same source.

    A single post-processing block is only valid while the frame moves
    less than pi, so the session is capped at pi/omega seconds and any
    further pulses are discarded.  By default the frame sweeps
    omega * t across that session, washing out the X/Y correlations;
    with ``assume_static`` the frame is pinned at angle zero instead,
    the most charitable stationary reading.
    """
    if n_total <= 0:
        raise ParameterError(f"n_total must be > 0, got {n_total}")
    t_total = n_total / params.rep_rate
    t_session = t_total if params.omega == 0.0 else min(t_total, math.pi / params.omega)
    n_session = t_session * params.rep_rate
    theta_hi = 0.0 if assume_static else params.omega * t_session
    acc = expected_slice_accumulator(params, 0, 1, n_session, 0.0, theta_hi)
    return report_from_accumulators([acc], params, sec, t_session)


@dataclass(frozen=True)
class LossSweepPoint:
    """One (loss, pulse budget, scheme) evaluation of the average rate."""

    loss_db: float
    n_total: float
    scheme: str
    average_rate_bps: float


def _at_loss(params: SystemParams, loss_db: float) -> SystemParams:
    """Parameter set with the full pre-detector budget moved to one knob."""
    return replace(params, fiber_loss_db=loss_db, receiver_loss_db=0.0)


def sweep_loss(
    params: SystemParams,
    sec: SecurityParams,
    loss_grid: Sequence[float],
    n_t_grid: Sequence[float],
    schemes: Sequence[str] = (FREE_RUNNING, ORIGINAL_OPTIMAL),
    m: int | None = None,
) -> list[LossSweepPoint]:
    """Average key rate over a grid of total losses and pulse budgets.

    ``loss_db`` is the whole fiber-plus-receiver budget; detector
    efficiency stays a separate factor.  Grid order is preserved in the
    output, one row per (loss, n_total, scheme).
    """
    for scheme in schemes:
        if scheme not in (FREE_RUNNING, ORIGINAL_OPTIMAL):
            raise ParameterError(f"unknown scheme: {scheme!r}")
    points = []
    for loss_db in loss_grid:
        at = _at_loss(params, loss_db)
        for n_total in n_t_grid:
            for scheme in schemes:
                if scheme == FREE_RUNNING:
                    report = uniform_slice_report(at, sec, n_total, m)
                else:
                    report = original_optimal_report(at, sec, n_total)
                points.append(
                    LossSweepPoint(
                        loss_db=loss_db,
                        n_total=n_total,
                        scheme=scheme,
                        average_rate_bps=report.average_rate_bps,
                    )
                )
    return points


def cutoff_loss(
    points: Sequence[LossSweepPoint], scheme: str, n_total: float
) -> float | None:
    """Largest grid loss with a positive rate, None if never positive."""
    losses = [
        p.loss_db
        for p in points
        if p.scheme == scheme and p.n_total == n_total and p.average_rate_bps > 0.0
    ]
    return max(losses) if losses else None


def write_loss_sweep(points: Sequence[LossSweepPoint], path: str | Path) -> None:
    """Write the sweep table; cutoffs per curve go into trailing comments."""
    curves = sorted({(p.scheme, p.n_total) for p in points}, key=lambda c: (c[0], c[1]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema: {LOSS_SWEEP_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["loss_db", "n_total", "scheme", "average_rate_bps"])
        for p in points:
            writer.writerow(
                [repr(p.loss_db), repr(p.n_total), p.scheme, repr(p.average_rate_bps)]
            )
        for scheme, n_total in curves:
            cutoff = cutoff_loss(points, scheme, n_total)
            fh.write(
                f"# cutoff_db[scheme={scheme},n_total={n_total!r}]: "
                f"{'none' if cutoff is None else repr(cutoff)}\n"
            )


@dataclass(frozen=True)
class ThetaSweepRow:
    """Per-slice channel quality and rate at one representative angle."""

    slice_index: int
    representative_angle: float
    c_value: float
    key_length_bits: float
    key_rate_bps: float


def sweep_theta(
    params: SystemParams,
    sec: SecurityParams,
    n_total: float,
    m: int | None = None,
) -> list[ThetaSweepRow]:
    """Analytic per-slice curve: C and rate versus representative angle.

    Slices are evaluated at their representative angles rather than
    span-averaged, so each row is the idealized value at that angle,
    not the blurred figure a finite dwell would report.
    """
    report = uniform_slice_report(params, sec, n_total, m, span_average=False)
    return [
        ThetaSweepRow(
            slice_index=s.slice_index,
            representative_angle=s.representative_angle,
            c_value=s.c_value,
            key_length_bits=s.key_length_bits,
            key_rate_bps=s.key_rate_bps,
        )
        for s in report.slices
    ]


def write_theta_sweep(
    rows: Sequence[ThetaSweepRow],
    path: str | Path,
    simulated: Sequence[tuple[float, float]] | None = None,
) -> None:
    """Write the angle sweep; optional (c, rate) simulated columns."""
    if simulated is not None and len(simulated) != len(rows):
        raise ParameterError("simulated column length must match row count")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema: {THETA_SWEEP_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        header = [
            "slice_index",
            "representative_angle_rad",
            "c_value",
            "key_length_bits",
            "key_rate_bps",
        ]
        if simulated is not None:
            header += ["c_value_sim", "key_rate_bps_sim"]
        writer.writerow(header)
        for i, r in enumerate(rows):
            row: list[object] = [
                r.slice_index,
                repr(r.representative_angle),
                repr(r.c_value),
                repr(r.key_length_bits),
                repr(r.key_rate_bps),
            ]
            if simulated is not None:
                row += [repr(simulated[i][0]), repr(simulated[i][1])]
            writer.writerow(row)
