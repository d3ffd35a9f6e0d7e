"""Angle estimation and slice accumulation.

Each sampling interval carries enough X-basis statistics to place the
misalignment angle on the circle; intervals with similar angle are
merged into one of ``m`` equal slices and post-processed together.  The
estimator works from the signal-intensity XX and XY error rates alone
and deliberately applies no visibility or background correction, so a
small bias toward the quadrant diagonals remains; the slice width is
chosen to absorb it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import (
    INTENSITIES,
    N_INTENSITIES,
    N_PAIRS,
    PAIR_LABELS,
    PAIRS,
)
from .intervals import IntervalTally
from .protocol import Basis, Intensity, ParameterError

TWO_PI = 2.0 * math.pi

# Canonical cell coordinates used by the estimator.
_SIGNAL_ROW = INTENSITIES.index(Intensity.SIGNAL)
_XX_COL = PAIRS.index((Basis.X, Basis.X))
_XY_COL = PAIRS.index((Basis.X, Basis.Y))

SLICE_SCHEMA = "rfiqkd-slices-v1"


def estimate_theta(e_xx: float, e_xy: float) -> float:
    """Misalignment angle from the signal XX and XY error rates.

    The XX rate fixes cos(theta) up to sign ambiguity of the half-plane;
    the XY rate picks the half-plane.  Inputs are probabilities; the
    correlator 1 - 2 e_xx is clamped into [-1, 1] before the arccos so
    float dust can never escape the domain.
    """
    if not 0.0 <= e_xx <= 1.0:
        raise ParameterError(f"e_xx outside [0, 1]: {e_xx}")
    if not 0.0 <= e_xy <= 1.0:
        raise ParameterError(f"e_xy outside [0, 1]: {e_xy}")
    base = math.acos(min(1.0, max(-1.0, 1.0 - 2.0 * e_xx)))
    theta = base if e_xy < 0.5 else TWO_PI - base
    return theta % TWO_PI


def slice_index(theta: float, m: int) -> int:
    """Index of the slice containing ``theta``.

    Slice ``i`` is centered on 2 pi i / m and spans half a slice width to
    each side; slice 0 therefore wraps around zero.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if not 0.0 <= theta < TWO_PI:
        raise ParameterError(f"theta outside [0, 2pi): {theta}")
    # floor(x + 0.5) rather than round(): round() ties to even, which
    # would send an exact boundary angle to the wrong slice.
    return int(math.floor(theta * m / TWO_PI + 0.5)) % m


@dataclass
class SliceAccumulator:
    """Merged tallies of all intervals assigned to one slice."""

    slice_index: int
    m: int
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    errors: np.ndarray = field(default=None)  # type: ignore[assignment]
    n_intervals: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.slice_index < self.m:
            raise ParameterError(
                f"slice_index {self.slice_index} outside [0, {self.m})"
            )
        if self.counts is None:
            self.counts = np.zeros((N_INTENSITIES, N_PAIRS), dtype=np.int64)
        if self.errors is None:
            self.errors = np.zeros((N_INTENSITIES, N_PAIRS), dtype=np.int64)

    @property
    def representative_angle(self) -> float:
        """Slice center angle 2 pi i / m."""
        return TWO_PI * self.slice_index / self.m

    def add(self, tally: IntervalTally) -> None:
        self.counts += tally.counts
        self.errors += tally.errors
        self.n_intervals += 1

    def qber(self, intensity_row: int, pair_col: int) -> float:
        """Error-weighted merged QBER of one cell; 0.5 when the cell is empty.

        Summing errors and counts before dividing keeps the estimate
        error-weighted; a mean of per-interval ratios would not be.
        """
        c = float(self.counts[intensity_row, pair_col])
        if c == 0.0:
            return 0.5
        return float(self.errors[intensity_row, pair_col]) / c


@dataclass(frozen=True)
class AccumulationResult:
    """Slice accumulators plus bookkeeping of estimator edge cases."""

    slices: tuple[SliceAccumulator, ...]
    n_degenerate: int
    n_clamped: int


def _smoothed_rates(
    tallies: Sequence[IntervalTally], width: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-interval XX/XY signal error rates, moving-averaged over ``width``.

    Returns (e_xx, e_xy, usable) arrays; ``usable`` marks intervals whose
    window held at least one XX and one XY count.  width=1 is the plain
    per-interval estimate.
    """
    n = len(tallies)
    cx = np.array([t.counts[_SIGNAL_ROW, _XX_COL] for t in tallies], dtype=np.float64)
    ex = np.array([t.errors[_SIGNAL_ROW, _XX_COL] for t in tallies], dtype=np.float64)
    cy = np.array([t.counts[_SIGNAL_ROW, _XY_COL] for t in tallies], dtype=np.float64)
    ey = np.array([t.errors[_SIGNAL_ROW, _XY_COL] for t in tallies], dtype=np.float64)
    if width > 1:
        kernel = np.ones(width)
        # Centered window, truncated at the ends; rates stay ratios of
        # summed errors to summed counts inside the window.
        pad = width // 2
        def windowed(a: np.ndarray) -> np.ndarray:
            s = np.convolve(a, kernel, mode="full")
            return s[pad : pad + n]
        cx, ex, cy, ey = windowed(cx), windowed(ex), windowed(cy), windowed(ey)
    usable = (cx > 0) & (cy > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        e_xx = np.where(cx > 0, ex / np.maximum(cx, 1.0), 0.0)
        e_xy = np.where(cy > 0, ey / np.maximum(cy, 1.0), 0.0)
    return e_xx, e_xy, usable


def accumulate(
    tallies: Sequence[IntervalTally], m: int, smoothing: int = 1
) -> AccumulationResult:
    """Assign every interval to a slice and merge its cells there.

    Returns all ``m`` accumulators (possibly empty) in index order.
    Degenerate intervals, those whose estimation window has no signal XX
    or no signal XY counts, inherit the previous interval's slice (the
    frame cannot have moved far in one interval); a leading degenerate
    run goes to slice 0.  Estimates that hit the arccos clamp are
    counted as well.  Counts and errors are conserved exactly.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if smoothing < 1:
        raise ParameterError(f"smoothing width must be >= 1, got {smoothing}")
    slices = tuple(SliceAccumulator(slice_index=i, m=m) for i in range(m))
    if not tallies:
        return AccumulationResult(slices=slices, n_degenerate=0, n_clamped=0)
    e_xx, e_xy, usable = _smoothed_rates(tallies, smoothing)
    n_degenerate = 0
    n_clamped = 0
    previous = 0
    for i, tally in enumerate(tallies):
        if not usable[i]:
            n_degenerate += 1
            idx = previous
        else:
            exx = float(e_xx[i])
            if exx == 0.0 or exx == 1.0:
                n_clamped += 1
            idx = slice_index(estimate_theta(exx, float(e_xy[i])), m)
        slices[idx].add(tally)
        previous = idx
    return AccumulationResult(
        slices=slices, n_degenerate=n_degenerate, n_clamped=n_clamped
    )


def write_slice_summary(result: AccumulationResult, path: str | Path) -> None:
    """Write one row per slice: merged cells, interval count, merged QBERs."""
    header = ["slice_index", "representative_angle_rad", "n_intervals"]
    for intensity in INTENSITIES:
        for label in PAIR_LABELS:
            header.append(f"{intensity.value}_{label}_count")
            header.append(f"{intensity.value}_{label}_errors")
    for intensity in INTENSITIES:
        for label in PAIR_LABELS:
            header.append(f"{intensity.value}_{label}_qber")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema: {SLICE_SCHEMA}\n")
        fh.write(
            f"# degenerate_intervals: {result.n_degenerate}; "
            f"clamped_estimates: {result.n_clamped}\n"
        )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for acc in result.slices:
            row: list[object] = [
                acc.slice_index,
                repr(acc.representative_angle),
                acc.n_intervals,
            ]
            for i in range(N_INTENSITIES):
                for j in range(N_PAIRS):
                    row.append(int(acc.counts[i, j]))
                    row.append(int(acc.errors[i, j]))
            for i in range(N_INTENSITIES):
                for j in range(N_PAIRS):
                    row.append(repr(acc.qber(i, j)))
            writer.writerow(row)
