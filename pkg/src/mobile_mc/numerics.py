"""Numerical backbone: adaptive quadrature, error functions, bounded maximization."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

PHI_RATIO = 2.0 / (1.0 + math.sqrt(5.0))


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class OptimizationError(RuntimeError):
    """Pre-scan found a non-unimodal objective."""


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    horizon_growth: float = 2.0

    def __post_init__(self):
        if not (self.abs_tol >= 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.abs_tol == 0 and self.rel_tol <= 0:
            raise ValueError("at least one tolerance must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if not self.horizon_growth > 1:
            raise ValueError("horizon_growth must be > 1")


DEFAULT_QUAD = QuadratureSettings()


def adaptive_quad(f: Callable[[float], float], a: float, b: float,
                  settings: QuadratureSettings = DEFAULT_QUAD,
                  points=None) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]`` with QUADPACK (QAGS / QAGP).

    Returns ``(value, error_estimate)``. Raises :class:`QuadratureError` when the
    integrator reports any failure; a partial value is never returned.
    """
    if not a <= b:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0, 0.0
    if points is not None:
        points = [p for p in points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, epsabs=settings.abs_tol, epsrel=settings.rel_tol,
                             limit=settings.max_subdivisions, points=points,
                             full_output=1)
    value, err = out[0], out[1]
    # full_output appends a message only when QUADPACK flags a problem
    failed = len(out) > 3
    if failed or not math.isfinite(value):
        tol = max(settings.abs_tol, settings.rel_tol * abs(value))
        if not (math.isfinite(value) and err <= tol):
            raise QuadratureError(
                f"quadrature on [{a}, {b}] failed (estimate {value!r}, error {err!r})")
    return float(value), float(err)


def improper_quad(f: Callable[[float], float], a: float,
                  settings: QuadratureSettings = DEFAULT_QUAD,
                  horizon: float | None = None, tol: float | None = None,
                  max_growths: int = 400) -> tuple[float, float]:
    """Integrate a non-negative, eventually decaying ``f`` over ``[a, inf)``.

    The horizon grows geometrically by ``settings.horizon_growth``. Stops when the
    remaining mass, extrapolated from the ratio of the last two increments as a
    geometric series, drops below ``tol`` (default ``settings.abs_tol``). Returns
    ``(value_up_to_horizon, tail_estimate)``.
    """
    tol = settings.abs_tol if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    hi = horizon if horizon is not None else a + 1.0
    if hi <= a:
        raise ValueError("horizon must exceed the lower limit")
    total, _ = adaptive_quad(f, a, hi, settings)
    prev_inc = None
    lo = hi
    for _ in range(max_growths):
        hi = a + (lo - a) * settings.horizon_growth
        inc, _ = adaptive_quad(f, lo, hi, settings)
        total += inc
        if prev_inc is not None and prev_inc > 0:
            ratio = inc / prev_inc
            if 0 <= ratio < 1:
                tail = inc * ratio / (1.0 - ratio)
                if tail < tol and inc < tol / settings.horizon_growth or (inc == 0 and tail == 0):
                    return total, tail
        elif inc == 0 and prev_inc == 0:
            return total, 0.0
        prev_inc = inc
        lo = hi
    raise QuadratureError(f"tail of improper integral not decaying below {tol} "
                          f"within {max_growths} horizon extensions (reached {hi:g})")


def erf_pair(x: float) -> tuple[float, float]:
    """Return ``(erf(x), erfc(x))``; erfc is evaluated directly, so no cancellation."""
    return float(special.erf(x)), float(special.erfc(x))


def maximize_unimodal(g: Callable[[float], float], lo: float, hi: float,
                      tol: float = 1e-9, n_scan: int = 33,
                      max_iter: int = 200) -> tuple[float, float]:
    """Locate the maximum of a unimodal ``g`` on ``[lo, hi]``.

    A coarse pre-scan picks the bracket around the best grid point, then golden
    section refines it to ``tol``. Raises :class:`OptimizationError` if the scan
    shows two separated local maxima.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    xs = np.linspace(lo, hi, n_scan)
    ys = np.array([g(float(x)) for x in xs])
    if not np.all(np.isfinite(ys)):
        raise OptimizationError("objective is not finite on the pre-scan grid")
    scale = max(1.0, float(np.max(np.abs(ys))))
    noise = 1e-12 * scale
    d = np.diff(ys)
    signs = np.where(d > noise, 1, np.where(d < -noise, -1, 0))
    nz = signs[signs != 0]
    if nz.size and np.count_nonzero(np.diff(nz) > 0) > 0:
        # a rise after a fall: a second separated maximum
        raise OptimizationError("objective is not unimodal on the pre-scan grid")

    i = int(np.argmax(ys))
    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, n_scan - 1)])
    x1 = b - PHI_RATIO * (b - a)
    x2 = a + PHI_RATIO * (b - a)
    f1, f2 = g(x1), g(x2)
    it = 0
    while b - a > tol and it < max_iter:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + PHI_RATIO * (b - a)
            f2 = g(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - PHI_RATIO * (b - a)
            f1 = g(x1)
        it += 1
    x = 0.5 * (a + b)
    best_x, best_f = x, g(x)
    # maxima sitting on the interval ends
    for xe, fe in ((float(xs[0]), float(ys[0])), (float(xs[-1]), float(ys[-1]))):
        if fe > best_f:
            best_x, best_f = xe, fe
    return best_x, float(best_f)
