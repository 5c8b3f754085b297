"""Scaled-Brownian-motion primitives.

Units are micrometres and seconds throughout: ``D`` is in um^2/s^alpha and the
mean square displacement of an entity after time ``t`` is ``2 D t**alpha``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class IncrementScheme(enum.Enum):
    """How per-step Gaussian variances are assigned.

    ``PAPER_IID`` gives every step of length ``dt`` variance ``2 D dt**alpha``.
    ``EXACT`` uses the time-changed increment ``2 D ((t+dt)**alpha - t**alpha)`` so
    that steps telescope to the MSD law.
    """

    PAPER_IID = "paper-iid"
    EXACT = "exact"


@dataclass(frozen=True)
class DiffusionSpec:
    alpha: float
    D: float

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not self.D >= 0:
            raise ValueError(f"D must be non-negative, got {self.D}")


def msd(spec: DiffusionSpec, t: float) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return 0.0
    return 2.0 * spec.D * t ** spec.alpha


def instantaneous_diffusion(spec: DiffusionSpec, t: float) -> float:
    """Time-local diffusion coefficient ``alpha t**(alpha-1) D``."""
    if t <= 0:
        raise ValueError("t must be positive")
    if spec.alpha == 1:
        return spec.D
    return spec.alpha * t ** (spec.alpha - 1.0) * spec.D


def increment_variance(spec: DiffusionSpec, t, dt: float,
                       scheme: IncrementScheme = IncrementScheme.EXACT):
    """Variance of the displacement over ``[t, t + dt]``.

    ``t`` may be an array (one clock per particle); the result broadcasts.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    if scheme is IncrementScheme.PAPER_IID or spec.alpha == 1:
        v = 2.0 * spec.D * dt ** spec.alpha
        return v if np.ndim(t) == 0 else np.full(np.shape(t), v)
    t = np.asarray(t, dtype=float)
    a = spec.alpha
    # (t+dt)^a - t^a without cancellation when t >> dt
    v = 2.0 * spec.D * t ** a * np.expm1(a * np.log1p(dt / np.where(t > 0, t, 1.0)))
    v = np.where(t > 0, v, 2.0 * spec.D * dt ** a)
    return float(v) if v.ndim == 0 else v


def sample_step(spec: DiffusionSpec, t, dt: float, scheme: IncrementScheme,
                rng: np.random.Generator, size=None):
    """Zero-mean Gaussian displacement with variance ``increment_variance``."""
    var = increment_variance(spec, t, dt, scheme)
    if size is None:
        size = np.shape(var) or None
    return rng.standard_normal(size) * np.sqrt(var)


def position_law(spec: DiffusionSpec, z0: float, k: int, T_s: float) -> tuple[float, float]:
    """Mean and variance of the position after ``k`` sampling intervals."""
    if not T_s > 0:
        raise ValueError("T_s must be positive")
    if k < 0:
        raise ValueError("k must be non-negative")
    return z0, 2.0 * k * spec.D * T_s ** spec.alpha
