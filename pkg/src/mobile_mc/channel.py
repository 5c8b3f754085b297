"""Timing-modulated binary erasure channel on top of the hitting CDF.

Bit 0 releases the molecule at ``T0 = 0`` and bit 1 at ``T1``. The receiver
reads 0 for an arrival before ``eta``, 1 for an arrival in ``[eta, Tu]``, and
erasure if nothing arrives within the channel use.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numerics import maximize_unimodal

_PROB_TOL = 1e-9


@dataclass(frozen=True)
class TimingScheme:
    T1: float
    Tu: float
    eta: float
    T0: float = 0.0

    def __post_init__(self):
        if self.T0 != 0:
            raise ValueError("T0 must be 0")
        if not 0 < self.T1 < self.Tu:
            raise ValueError("need 0 < T1 < Tu")
        if not 0 < self.eta < self.Tu:
            raise ValueError("need 0 < eta < Tu")
        if self.eta >= self.T1:
            warnings.warn(f"eta={self.eta} >= T1={self.T1}: the bit-0 and bit-1 "
                          "detection windows overlap", stacklevel=2)


@dataclass(frozen=True)
class TransitionProbs:
    p0: float
    p1: float
    eps0: float
    eps1: float

    def __post_init__(self):
        for name in ("p0", "p1", "eps0", "eps1"):
            v = getattr(self, name)
            if not -_PROB_TOL <= v <= 1 + _PROB_TOL:
                raise ValueError(f"{name}={v} is not a probability")
        if self.p0 + self.eps0 > 1 + _PROB_TOL or self.p1 + self.eps1 > 1 + _PROB_TOL:
            raise ValueError("p + eps exceeds 1 for one of the inputs")

    def swapped(self) -> "TransitionProbs":
        return TransitionProbs(self.p1, self.p0, self.eps1, self.eps0)

    def rows(self) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        """Output laws over (0, 1, erasure) given input 0 and given input 1."""
        return ((self.p0, 1.0 - self.p0 - self.eps0, self.eps0),
                (1.0 - self.p1 - self.eps1, self.p1, self.eps1))


@dataclass(frozen=True)
class OutputDist:
    pr0: float
    pr1: float
    pr_eps: float

    def as_tuple(self):
        return (self.pr0, self.pr1, self.pr_eps)


def transition_probs(scheme: TimingScheme, F: Callable[[float], float],
                     F_total: float, clip: bool = False) -> TransitionProbs:
    """Correct-detection and erasure probabilities from a hitting CDF ``F``.

    ``F`` is taken as 0 for negative arguments. ``F_total`` is the eventual
    hitting probability; ``F(inf - T1)`` is read as ``F_total``. With ``clip``,
    CDF values above 1 (possible with the unnormalised density) are clipped with
    a warning.
    """
    def cdf(x):
        if x <= 0:
            return 0.0
        v = float(F(x))
        if clip and v > 1.0:
            warnings.warn(f"hitting CDF {v:.6g} > 1 clipped", stacklevel=3)
            return 1.0
        return v

    total = F_total
    if clip and total > 1.0:
        warnings.warn(f"eventual hitting probability {total:.6g} > 1 clipped", stacklevel=2)
        total = 1.0
    F_eta, F_u = cdf(scheme.eta), cdf(scheme.Tu)
    F_u1, F_eta1 = cdf(scheme.Tu - scheme.T1), cdf(scheme.eta - scheme.T1)
    if total < F_u - _PROB_TOL:
        raise ValueError(f"F_total={total} is below F(Tu)={F_u}: inconsistent curve")
    p0 = F_eta
    p1 = F_u1 - F_eta1
    eps0 = max(total - F_u, 0.0)
    eps1 = max(total - F_u1, 0.0)
    return TransitionProbs(p0, p1, eps0, eps1)


def output_distribution(probs: TransitionProbs, beta: float) -> OutputDist:
    """Law of the receiver output when bit 0 is sent with probability ``beta``."""
    if not 0 <= beta <= 1:
        raise ValueError("beta must lie in [0, 1]")
    (a0, a1, ae), (b0, b1, be) = probs.rows()
    return OutputDist(beta * a0 + (1 - beta) * b0,
                      beta * a1 + (1 - beta) * b1,
                      beta * ae + (1 - beta) * be)


def ternary_entropy(d) -> float:
    """Shannon entropy in bits of a distribution over {0, 1, erasure}."""
    p = np.asarray(d.as_tuple() if isinstance(d, OutputDist) else d, dtype=float)
    if p.shape != (3,) or np.any(p < -_PROB_TOL) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"not a distribution over three outcomes: {p}")
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _entropy_loose(p) -> float:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def mutual_information(probs: TransitionProbs, beta: float) -> float:
    """Mutual information between release symbol and receiver output, in bits."""
    out = output_distribution(probs, beta)
    row0, row1 = probs.rows()
    mi = (_entropy_loose(out.as_tuple())
          - beta * _entropy_loose(row0) - (1 - beta) * _entropy_loose(row1))
    return max(mi, 0.0)


def mi_curve(probs: TransitionProbs, betas) -> np.ndarray:
    return np.array([mutual_information(probs, float(b)) for b in betas])


def maximize_air(probs: TransitionProbs, tol: float = 1e-9) -> tuple[float, float]:
    """Achievable information rate: mutual information maximised over ``beta``."""
    return maximize_unimodal(lambda b: mutual_information(probs, b), 0.0, 1.0, tol)


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))
