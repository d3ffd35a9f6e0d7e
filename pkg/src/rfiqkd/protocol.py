"""Core quantities for reference-frame-independent (RFI) QKD.

An RFI link keys from the Z basis, which both parties share exactly, and
monitors the X/Y plane, which slowly rotates by an unknown misalignment
angle.  Security is quantified through the frame-independent channel
quality

    C = <XX>^2 + <XY>^2 + <YX>^2 + <YY>^2,

built from the four cross-correlators of the rotating bases.  For an
ideal channel C = 2 regardless of the misalignment angle, which is what
makes the scheme calibration-free.  This module provides the scalar
building blocks: binary entropy, QBER/correlator conversion, the C
combination, the eavesdropper-information bound used in the key-length
formula, and the validity window that limits how fast the frame may
rotate for a given collection rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

# Empirical tolerance constant of the drift-validity window: the minimum
# frame change resolvable at transmittance eta and pulse rate n0 scales as
# (DRIFT_TOLERANCE_CONSTANT / (eta * n0)) * omega.
DRIFT_TOLERANCE_CONSTANT = 3.0e4


class Basis(Enum):
    """Measurement basis label."""

    X = "X"
    Y = "Y"
    Z = "Z"


class Intensity(Enum):
    """Source intensity class of a decoy-state transmitter."""

    SIGNAL = "signal"
    DECOY = "decoy"
    VACUUM = "vacuum"


class PhysicalityWarning(UserWarning):
    """A statistically estimated quantity exceeds its physical range."""


class ParameterError(ValueError):
    """A parameter or argument is outside its documented domain."""


@dataclass(frozen=True)
class SecurityParams:
    """Finite-size security knobs shared by the post-processing chain.

    f_ec is the error-correction inefficiency multiplying the Shannon
    limit; n_sigma the number of standard deviations applied to every
    observed rate (5.3 corresponds to eps_pe ~ 1e-7 per observable under
    the Gaussian model); eps_pe is carried for reporting.
    """

    f_ec: float = 1.16
    eps_pe: float = 1e-7
    n_sigma: float = 5.3

    def __post_init__(self) -> None:
        if self.f_ec < 1.0:
            raise ParameterError(f"f_ec must be >= 1, got {self.f_ec}")
        if not 0.0 < self.eps_pe < 1.0:
            raise ParameterError(f"eps_pe must be in (0, 1), got {self.eps_pe}")
        if self.n_sigma < 0.0:
            raise ParameterError(f"n_sigma must be >= 0, got {self.n_sigma}")


@dataclass(frozen=True)
class CorrelationSet:
    """The four X/Y-plane correlators <XX>, <XY>, <YX>, <YY>."""

    xx: float
    xy: float
    yx: float
    yy: float

    def __post_init__(self) -> None:
        for name in ("xx", "xy", "yx", "yy"):
            value = getattr(self, name)
            if not -1.0 <= value <= 1.0:
                raise ParameterError(f"correlator {name} outside [-1, 1]: {value}")

    @classmethod
    def from_qbers(cls, e_xx: float, e_xy: float, e_yx: float, e_yy: float) -> "CorrelationSet":
        """Build correlators from the pair QBERs via <AB> = 1 - 2 E^AB."""
        return cls(
            correlation_from_qber(e_xx),
            correlation_from_qber(e_xy),
            correlation_from_qber(e_yx),
            correlation_from_qber(e_yy),
        )


@dataclass(frozen=True)
class ValidityBounds:
    """Allowed frame-change window and session limit for a drifting link."""

    delta_theta_min: float
    delta_theta_max: float
    t_max: float
    valid: bool


def binary_entropy(x: float) -> float:
    """Shannon entropy (bits) of a binary variable with probability x."""
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"binary_entropy argument outside [0, 1]: {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def correlation_from_qber(qber: float) -> float:
    """Two-party correlator of a basis pair with error rate ``qber``."""
    if not 0.0 <= qber <= 1.0:
        raise ParameterError(f"QBER outside [0, 1]: {qber}")
    return 1.0 - 2.0 * qber


def c_value(corr: CorrelationSet) -> float:
    """Frame-independent channel quality C.

    Returns the raw sum of squared correlators.  Values above 2 are
    unphysical and can only arise from statistical fluctuation of the
    inputs; they are returned unchanged but flagged with a
    ``PhysicalityWarning`` so callers can clamp knowingly.
    """
    c = corr.xx**2 + corr.xy**2 + corr.yx**2 + corr.yy**2
    if c > 2.0 + 1e-9:
        warnings.warn(
            f"C value {c:.6f} exceeds the physical maximum 2",
            PhysicalityWarning,
            stacklevel=2,
        )
    return c


def eve_information(c: float, e_b: float) -> float:
    """Upper bound on the eavesdropper's information per key bit.

    Evaluates the closed-form bound used for RFI links: with
    u = min(sqrt(c/2) / (1 - e_b), 1) and
    v = sqrt(c/2 - (1 - e_b)^2 u^2) / e_b,

        I_E = (1 - e_b) H2[(1 + u) / 2] + e_b H2[(1 + v) / 2],

    where e_b is the key-basis error rate.  The second term vanishes in
    the e_b -> 0 limit, which is handled explicitly; v is clamped to 1
    (H2 -> 0) in the corner where c exceeds the range physically
    consistent with e_b, keeping the bound monotone in c.
    """
    if c < 0.0:
        raise ParameterError(f"c must be >= 0, got {c}")
    if not 0.0 <= e_b <= 0.5:
        raise ParameterError(f"e_b must be in [0, 0.5], got {e_b}")
    half_c = min(c, 2.0) / 2.0
    u = min(math.sqrt(half_c) / (1.0 - e_b), 1.0)
    first = (1.0 - e_b) * binary_entropy((1.0 + u) / 2.0)
    if e_b == 0.0:
        return first
    v = math.sqrt(max(half_c - (1.0 - e_b) ** 2 * u**2, 0.0)) / e_b
    v = min(v, 1.0)
    return first + e_b * binary_entropy((1.0 + v) / 2.0)


def validity_bounds(eta: float, n0: float, omega: float) -> ValidityBounds:
    """Frame-change window for drift rate ``omega`` at collection rate ``eta * n0``.

    The window is

        (DRIFT_TOLERANCE_CONSTANT / (eta * n0)) * omega <= dtheta <= pi,

    and a single sampling block must finish within t_max = pi / omega
    (infinite for a static frame).  ``valid`` reports whether the window
    is non-empty.
    """
    if not 0.0 < eta <= 1.0:
        raise ParameterError(f"eta must be in (0, 1], got {eta}")
    if n0 <= 0.0:
        raise ParameterError(f"n0 must be > 0, got {n0}")
    if omega < 0.0:
        raise ParameterError(f"omega must be >= 0, got {omega}")
    delta_min = DRIFT_TOLERANCE_CONSTANT / (eta * n0) * omega
    t_max = math.inf if omega == 0.0 else math.pi / omega
    return ValidityBounds(
        delta_theta_min=delta_min,
        delta_theta_max=math.pi,
        t_max=t_max,
        valid=delta_min <= math.pi,
    )
