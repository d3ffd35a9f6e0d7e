"""Deterministic misalignment-angle trajectories.

Four waveform families cover the scenarios of interest: a frozen frame,
a constant-rate rotation, a sinusoid that sweeps the full circle once
per period, and a rate-capped random walk.  ``theta_at`` is a pure
function of (model, time); the walk derives its path from the model's
seed so that repeated evaluation is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .protocol import ParameterError

TWO_PI = 2.0 * math.pi

# Integration step (s) of the random-walk path.  Coarser than any
# sensible sampling interval divided by a few, fine enough that the
# per-step rate cap also caps the per-interval average rate.
_WALK_STEP = 1.0


class DriftKind(Enum):
    STATIC = "static"
    LINEAR = "linear"
    SINUSOIDAL = "sinusoidal"
    RANDOM_WALK = "random_walk"


@dataclass(frozen=True)
class DriftModel:
    """Parameters of one angle trajectory.

    ``rate_or_period`` is the angular rate in rad/s for LINEAR and the
    period in seconds for SINUSOIDAL; it is unused otherwise.  The
    sinusoid sweeps theta0 .. theta0 + 2 pi and back each period, with
    peak rate 2 pi^2 / period.  ``walk_sigma`` (rad per sqrt s) scales
    the random walk, whose per-step increments are clipped so the rate
    never exceeds ``omega_cap``; LINEAR and SINUSOIDAL must respect the
    same cap at construction.
    """

    kind: DriftKind = DriftKind.STATIC
    theta0: float = 0.0
    rate_or_period: float = 0.0
    walk_sigma: float = 0.0
    omega_cap: float = 6.9e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta0 < TWO_PI:
            raise ParameterError(f"theta0 outside [0, 2pi): {self.theta0}")
        if self.omega_cap < 0.0:
            raise ParameterError(f"omega_cap must be >= 0, got {self.omega_cap}")
        if self.kind is DriftKind.LINEAR:
            if abs(self.rate_or_period) > self.omega_cap:
                raise ParameterError(
                    f"linear rate {self.rate_or_period} exceeds omega_cap {self.omega_cap}"
                )
        elif self.kind is DriftKind.SINUSOIDAL:
            if self.rate_or_period <= 0.0:
                raise ParameterError("sinusoidal drift needs a positive period")
            peak = 2.0 * math.pi**2 / self.rate_or_period
            if peak > self.omega_cap * (1.0 + 1e-12):
                raise ParameterError(
                    f"sinusoidal peak rate {peak:.3e} exceeds omega_cap {self.omega_cap:.3e}"
                )
        elif self.kind is DriftKind.RANDOM_WALK:
            if self.walk_sigma < 0.0:
                raise ParameterError(f"walk_sigma must be >= 0, got {self.walk_sigma}")


@lru_cache(maxsize=8)
def _walk_path(seed: int, sigma: float, cap: float, n_steps: int) -> np.ndarray:
    """Cumulative walk displacement at each integer step, origin at 0."""
    rng = np.random.default_rng(seed)
    steps = rng.normal(0.0, sigma * math.sqrt(_WALK_STEP), size=n_steps)
    limit = cap * _WALK_STEP
    np.clip(steps, -limit, limit, out=steps)
    return np.concatenate(([0.0], np.cumsum(steps)))


def theta_at(t: float, model: DriftModel) -> float:
    """Misalignment angle at time ``t`` seconds, reduced into [0, 2 pi)."""
    if t < 0.0:
        raise ParameterError(f"time must be >= 0, got {t}")
    if model.kind is DriftKind.STATIC:
        theta = model.theta0
    elif model.kind is DriftKind.LINEAR:
        theta = model.theta0 + model.rate_or_period * t
    elif model.kind is DriftKind.SINUSOIDAL:
        phase = TWO_PI * t / model.rate_or_period
        theta = model.theta0 + math.pi * (1.0 - math.cos(phase))
    else:
        # Interpolate the cached path; the horizon grows in powers of two
        # so a time sweep costs O(log) regenerations, and a prefix of a
        # longer path equals the shorter path (same rng draw order).
        n_steps = int(math.ceil(t / _WALK_STEP)) + 1
        horizon = 1 << max(n_steps - 1, 1).bit_length()
        path = _walk_path(model.seed, model.walk_sigma, model.omega_cap, horizon)
        i = min(int(t / _WALK_STEP), len(path) - 2)
        frac = t / _WALK_STEP - i
        theta = model.theta0 + path[i] + frac * (path[i + 1] - path[i])
    return theta % TWO_PI
