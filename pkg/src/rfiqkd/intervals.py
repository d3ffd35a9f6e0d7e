"""Interval-level Monte Carlo sampling and the tally log format.

A run is cut into fixed sampling intervals.  Each interval draws its
fifteen sifted-cell counts from the expectation model (Poisson by
default, exact binomial over the gate count as a slow cross-check mode)
and error counts binomially within each cell.  Tallies round-trip
through a delimiter-separated log that is the only contract between the
simulator and the post-processing chain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import (
    INTENSITIES,
    N_INTENSITIES,
    N_PAIRS,
    PAIR_LABELS,
    PAIRS,
    SystemParams,
    interval_expectation,
    pair_gate_fraction,
)
from .drift import DriftModel, theta_at
from .protocol import ParameterError

LOG_SCHEMA = "rfiqkd-intervals-v1"


class DataFormatError(Exception):
    """An on-disk table violates the documented schema."""


@dataclass(frozen=True)
class IntervalTally:
    """Observed sifted counts of one sampling interval.

    ``counts``/``errors`` are integer arrays in the canonical
    (intensity, pair) layout.  ``true_theta`` carries the simulation
    truth when known; analysis code never reads it.
    """

    index: int
    t_start: float
    counts: np.ndarray
    errors: np.ndarray
    true_theta: float | None = None

    def __post_init__(self) -> None:
        if self.counts.shape != (N_INTENSITIES, N_PAIRS):
            raise ParameterError(f"counts shape {self.counts.shape} != cell layout")
        if self.errors.shape != (N_INTENSITIES, N_PAIRS):
            raise ParameterError(f"errors shape {self.errors.shape} != cell layout")
        if (self.counts < 0).any() or (self.errors < 0).any():
            raise ParameterError("counts and errors must be non-negative")
        if (self.errors > self.counts).any():
            raise ParameterError("errors cannot exceed counts")


def simulate_intervals(
    params: SystemParams,
    drift: DriftModel,
    duration: float,
    seed: int,
    count_sampler: str = "poisson",
) -> list[IntervalTally]:
    """Sample ``floor(duration / t_interval)`` tallies along a drift path.

    The angle is evaluated at each interval midpoint.  ``count_sampler``
    selects Poisson cell counts (default) or exact binomial draws over
    the integer gate count.  A fixed seed fixes every byte of output.
    """
    if duration < params.t_interval:
        raise ParameterError(
            f"duration {duration} is shorter than one interval ({params.t_interval})"
        )
    if count_sampler not in ("poisson", "binomial"):
        raise ParameterError(f"unknown count_sampler: {count_sampler!r}")
    n = int(math.floor(duration / params.t_interval))
    rng = np.random.default_rng(seed)
    thetas = np.array(
        [theta_at((i + 0.5) * params.t_interval, drift) for i in range(n)]
    )

    lam = np.zeros((n, N_INTENSITIES, N_PAIRS))
    qber = np.zeros((n, N_INTENSITIES, N_PAIRS))
    for i, theta in enumerate(thetas):
        exp = interval_expectation(params, float(theta))
        lam[i] = exp.counts
        with np.errstate(invalid="ignore"):
            qber[i] = np.where(exp.counts > 0, exp.errors / exp.counts, 0.0)

    if count_sampler == "poisson":
        counts = rng.poisson(lam)
    else:
        gates = np.zeros((N_INTENSITIES, N_PAIRS))
        pulses = params.rep_rate * params.t_interval
        for ii, intensity in enumerate(INTENSITIES):
            for j, pair in enumerate(PAIRS):
                gates[ii, j] = round(pulses * pair_gate_fraction(params, intensity, pair))
        with np.errstate(invalid="ignore", divide="ignore"):
            q = np.where(gates > 0, lam / gates, 0.0)
        counts = rng.binomial(np.broadcast_to(gates.astype(np.int64), lam.shape), np.minimum(q, 1.0))
    errors = rng.binomial(counts, qber)

    return [
        IntervalTally(
            index=i,
            t_start=i * params.t_interval,
            counts=counts[i].astype(np.int64),
            errors=errors[i].astype(np.int64),
            true_theta=float(thetas[i]),
        )
        for i in range(n)
    ]


def _column_names(with_theta: bool) -> list[str]:
    names = ["index", "t_start_s"]
    for intensity in INTENSITIES:
        for label in PAIR_LABELS:
            names.append(f"{intensity.value}_{label}_count")
            names.append(f"{intensity.value}_{label}_errors")
    if with_theta:
        names.append("true_theta_rad")
    return names


def write_log(tallies: Sequence[IntervalTally], path: str | Path) -> None:
    """Write tallies as a UTF-8 delimiter-separated log with header row."""
    with_theta = bool(tallies) and tallies[0].true_theta is not None
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema: {LOG_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_column_names(with_theta))
        for tally in tallies:
            row: list[object] = [tally.index, repr(tally.t_start)]
            for i in range(N_INTENSITIES):
                for j in range(N_PAIRS):
                    row.append(int(tally.counts[i, j]))
                    row.append(int(tally.errors[i, j]))
            if with_theta:
                if tally.true_theta is None:
                    raise ParameterError("mixed presence of true_theta across tallies")
                row.append(repr(tally.true_theta))
            writer.writerow(row)


def _parse_int(field: str, line_no: int, name: str) -> int:
    try:
        value = int(field)
    except ValueError as exc:
        raise DataFormatError(f"line {line_no}: {name} is not an integer: {field!r}") from exc
    if value < 0:
        raise DataFormatError(f"line {line_no}: {name} is negative: {value}")
    return value


def read_log(path: str | Path) -> list[IntervalTally]:
    """Read a tally log, validating the schema row by row.

    Leading ``#`` comment lines are skipped, except that a declared
    schema is checked.  Raises ``DataFormatError`` with a 1-based line
    number for a missing or unknown header, a truncated or overlong
    row, non-integer or negative counts, or errors exceeding counts.
    """
    expected_plain = _column_names(False)
    expected_theta = _column_names(True)
    tallies: list[IntervalTally] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows: list[tuple[int, list[str]]] = []
        for line_no, line in enumerate(fh, start=1):
            if line.startswith("#"):
                comment = line[1:].strip()
                if comment.startswith("schema:"):
                    declared = comment[len("schema:"):].strip()
                    if declared != LOG_SCHEMA:
                        raise DataFormatError(
                            f"line {line_no}: schema {declared!r}, expected {LOG_SCHEMA!r}"
                        )
                continue
            rows.append((line_no, next(csv.reader([line]), [])))
        if not rows:
            raise DataFormatError("line 1: empty file, expected header row")
        header_line, header = rows[0]
        if header == expected_theta:
            with_theta = True
        elif header == expected_plain:
            with_theta = False
        else:
            raise DataFormatError(f"line {header_line}: unrecognized header {header[:4]}...")
        width = len(header)
        for line_no, row in rows[1:]:
            if len(row) != width:
                raise DataFormatError(
                    f"line {line_no}: expected {width} fields, found {len(row)}"
                )
            index = _parse_int(row[0], line_no, "index")
            try:
                t_start = float(row[1])
                true_theta = float(row[-1]) if with_theta else None
            except ValueError as exc:
                raise DataFormatError(f"line {line_no}: malformed float field") from exc
            counts = np.zeros((N_INTENSITIES, N_PAIRS), dtype=np.int64)
            errors = np.zeros((N_INTENSITIES, N_PAIRS), dtype=np.int64)
            pos = 2
            for i in range(N_INTENSITIES):
                for j in range(N_PAIRS):
                    counts[i, j] = _parse_int(row[pos], line_no, header[pos])
                    errors[i, j] = _parse_int(row[pos + 1], line_no, header[pos + 1])
                    if errors[i, j] > counts[i, j]:
                        raise DataFormatError(
                            f"line {line_no}: {header[pos + 1]} exceeds its count"
                        )
                    pos += 2
            tallies.append(
                IntervalTally(
                    index=index,
                    t_start=t_start,
                    counts=counts,
                    errors=errors,
                    true_theta=true_theta,
                )
            )
    return tallies


def total_duration(tallies: Iterable[IntervalTally], params: SystemParams) -> float:
    """Wall time covered by a tally list."""
    return sum(1 for _ in tallies) * params.t_interval
