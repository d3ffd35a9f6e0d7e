"""Vacuum+weak decoy-state bounds with finite-statistics adjustment.

Each slice is an independent post-processing unit: from its merged
three-intensity tallies we bound the single-photon yield from below and
the single-photon error rate from above, pair by pair.  Observables are
shifted by ``n_sigma`` standard errors in the direction that weakens the
bound before the closed forms are applied, so the output stays a valid
bound under Gaussian fluctuation of every input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    INTENSITIES,
    N_PAIRS,
    PAIRS,
    SystemParams,
    pair_gate_fraction,
)
from .protocol import Intensity, ParameterError, SecurityParams
from .slicing import SliceAccumulator

_SIGNAL = INTENSITIES.index(Intensity.SIGNAL)
_DECOY = INTENSITIES.index(Intensity.DECOY)
_VACUUM = INTENSITIES.index(Intensity.VACUUM)
_ZZ = N_PAIRS - 1

# Error rate of a background-only click; dark counts land on either
# detector with equal probability.
VACUUM_ERROR_RATE = 0.5


@dataclass(frozen=True)
class DecoyBounds:
    """Single-photon bounds for one slice.

    ``e1_upper`` and ``y1_lower_pairs`` are per-pair arrays in the
    canonical pair order; entries for pairs whose merged error rate sits
    above one half are bounds on the folded (majority-flipped) rate, and
    ``fold_signs`` records the corresponding correlator sign.  ``flagged``
    marks a slice whose statistics cannot support a positive bound; such
    a slice contributes no key.  ``inconsistent`` additionally marks
    decoy gains exceeding signal gains by more than fluctuation allows.
    """

    y1_lower: float
    e1_upper: np.ndarray
    n1_lower_z: float
    q1_lower: float
    y1_lower_pairs: np.ndarray
    fold_signs: np.ndarray
    flagged: bool
    inconsistent: bool


def fluctuation_adjust(
    observed_count: float,
    n_exposures: float,
    sec: SecurityParams,
    direction: str,
) -> float:
    """Observed rate shifted by ``n_sigma`` binomial standard errors.

    The result is clamped into [0, 1]; with n_sigma = 0 this is the
    plain ratio.
    """
    if observed_count < 0:
        raise ParameterError(f"observed_count must be >= 0, got {observed_count}")
    if n_exposures <= 0:
        raise ParameterError(f"n_exposures must be > 0, got {n_exposures}")
    if direction not in ("upper", "lower"):
        raise ParameterError(f"direction must be 'upper' or 'lower', got {direction!r}")
    rate = min(observed_count / n_exposures, 1.0)
    shift = sec.n_sigma * math.sqrt(rate * (1.0 - rate) / n_exposures)
    adjusted = rate + shift if direction == "upper" else rate - shift
    return min(1.0, max(0.0, adjusted))


def slice_exposures(acc: SliceAccumulator, params: SystemParams) -> np.ndarray:
    """Pulse exposures of every (intensity, pair) cell in the slice."""
    pulses = acc.n_intervals * params.t_interval * params.rep_rate
    out = np.zeros((len(INTENSITIES), N_PAIRS))
    for i, intensity in enumerate(INTENSITIES):
        for j, pair in enumerate(PAIRS):
            out[i, j] = pulses * pair_gate_fraction(params, intensity, pair)
    return out


def _flagged(m_pairs: int) -> DecoyBounds:
    return DecoyBounds(
        y1_lower=0.0,
        e1_upper=np.ones(m_pairs),
        n1_lower_z=0.0,
        q1_lower=0.0,
        y1_lower_pairs=np.zeros(m_pairs),
        fold_signs=np.ones(m_pairs),
        flagged=True,
        inconsistent=False,
    )


def decoy_bounds(
    acc: SliceAccumulator, params: SystemParams, sec: SecurityParams
) -> DecoyBounds:
    """Vacuum+weak single-photon bounds from one slice's merged tallies.

    Per pair, with Q denoting gains and Y0 the vacuum-intensity gain,

        Y1 >= mu / (mu nu - nu^2) *
              (Q_nu^- e^nu - Q_mu^+ e^mu nu^2/mu^2 - (mu^2-nu^2)/mu^2 * Y0^+)
        e1 <= ((E Q)_nu^+ e^nu - 1/2 Y0^-) / (nu Y1^-)

    where +/- are fluctuation-adjusted observables.  The Y0 entering the
    yield bound is adjusted UP: it is subtracted, so only its largest
    plausible value keeps the result a true lower bound.  Pairs whose
    merged signal error rate exceeds one half are folded first (errors
    become counts minus errors) so the bound applies to the minority
    rate; ``fold_signs`` carries the sign for reconstruction.

    A slice with no intervals, a non-positive yield bound, or a negative
    single-photon count comes back ``flagged`` and yields no key rather
    than raising.
    """
    if not params.mu > params.nu > 0.0:
        raise ParameterError("vacuum+weak bounds need mu > nu > 0")
    mu, nu = params.mu, params.nu
    if acc.n_intervals <= 0:
        return _flagged(N_PAIRS)
    exposures = slice_exposures(acc, params)
    if not (exposures > 0).all():
        return _flagged(N_PAIRS)

    counts = np.asarray(acc.counts, dtype=np.float64)
    errors = np.asarray(acc.errors, dtype=np.float64)

    # Fold direction per pair from the merged signal-intensity rate.
    fold_signs = np.ones(N_PAIRS)
    folded_errors = errors.copy()
    for j in range(N_PAIRS):
        c = counts[_SIGNAL, j]
        if c > 0 and errors[_SIGNAL, j] / c > 0.5:
            fold_signs[j] = -1.0
            folded_errors[:, j] = counts[:, j] - errors[:, j]

    scale = mu / (mu * nu - nu * nu)
    weight_mu = math.exp(mu) * nu * nu / (mu * mu)
    weight_vac = (mu * mu - nu * nu) / (mu * mu)

    y1_pairs = np.zeros(N_PAIRS)
    e1_upper = np.ones(N_PAIRS)
    inconsistent = False
    for j in range(N_PAIRS):
        q_mu_up = fluctuation_adjust(counts[_SIGNAL, j], exposures[_SIGNAL, j], sec, "upper")
        q_nu_dn = fluctuation_adjust(counts[_DECOY, j], exposures[_DECOY, j], sec, "lower")
        y0_up = fluctuation_adjust(counts[_VACUUM, j], exposures[_VACUUM, j], sec, "upper")
        y0_dn = fluctuation_adjust(counts[_VACUUM, j], exposures[_VACUUM, j], sec, "lower")
        if q_nu_dn > q_mu_up:
            inconsistent = True
        y1 = scale * (
            q_nu_dn * math.exp(nu) - q_mu_up * weight_mu - weight_vac * y0_up
        )
        y1_pairs[j] = min(max(y1, 0.0), 1.0)
        if y1_pairs[j] > 0.0:
            err_rate_up = fluctuation_adjust(
                folded_errors[_DECOY, j], exposures[_DECOY, j], sec, "upper"
            )
            e1 = (err_rate_up * math.exp(nu) - VACUUM_ERROR_RATE * y0_dn) / (
                nu * y1_pairs[j]
            )
            e1_upper[j] = min(max(e1, 0.0), 1.0)

    p1 = mu * math.exp(-mu)
    n1_lower_z = y1_pairs[_ZZ] * p1 * exposures[_SIGNAL, _ZZ]
    q1_lower = y1_pairs[_ZZ] * p1
    flagged = bool(y1_pairs[_ZZ] <= 0.0 or n1_lower_z <= 0.0)
    return DecoyBounds(
        y1_lower=float(y1_pairs[_ZZ]),
        e1_upper=e1_upper,
        n1_lower_z=float(n1_lower_z),
        q1_lower=float(q1_lower),
        y1_lower_pairs=y1_pairs,
        fold_signs=fold_signs,
        flagged=flagged,
        inconsistent=inconsistent,
    )
