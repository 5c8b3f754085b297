"""First-hitting-time densities and hitting probabilities.

The molecule is absorbed when it first reaches the receiver. For static devices at
distance ``r0`` the density is the time-changed Levy-Smirnov law. For mobile
devices the TX-RX distance at release is folded-normal, and the density is its
average over that distance. Three routes to the mobile density are kept side by
side:

* :func:`mobile_fhtd_quadrature` integrates over the distance numerically and is
  the reference everything else is checked against;
* :func:`mobile_fhtd_corrected` is the closed form obtained by completing the
  square in that integral;
* :func:`mobile_fhtd_printed` is the closed form as originally published, kept so
  its mismatch can be reported.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import special

from .numerics import (DEFAULT_QUAD, QuadratureError, QuadratureSettings,
                       adaptive_quad, improper_quad)

SQRT_PI = math.sqrt(math.pi)
# r_k integration cut-off in units of sigma_k (Gaussian tail < 1e-30)
R_TRUNCATION_SIGMAS = 12.0


class FhtdVariant(enum.Enum):
    """``PRINTED`` integrates to ``1/alpha``; ``NORMALIZED`` is ``alpha`` times it."""

    PRINTED = "printed"
    NORMALIZED = "normalized"


class ClosedForm(enum.Enum):
    PRINTED = "printed"
    CORRECTED = "corrected"
    QUADRATURE = "quadrature"


def _variant_factor(alpha: float, variant: FhtdVariant) -> float:
    return alpha if variant is FhtdVariant.NORMALIZED else 1.0


@dataclass(frozen=True)
class MobileChannelParams:
    """Channel geometry and mobility. Lengths in um, times in s, D in um^2/s^alpha."""

    D_m: float
    D_tx: float
    D_rx: float
    alpha: float
    T_s: float
    k: int
    r0: float

    def __post_init__(self):
        problems = []
        if not self.r0 > 0:
            problems.append("r0 must be positive")
        if not self.T_s > 0:
            problems.append("T_s must be positive")
        if int(self.k) != self.k or self.k < 1:
            problems.append("k must be a positive integer")
        if not self.D_m >= 0:
            problems.append("D_m must be non-negative")
        if not (self.D_tx >= 0 and self.D_rx >= 0):
            problems.append("D_tx and D_rx must be non-negative")
        if not 0 < self.alpha <= 2:
            problems.append("alpha must lie in (0, 2]")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def D_tr(self) -> float:
        """Relative TX-RX diffusivity."""
        return self.D_tx + self.D_rx

    @property
    def D_mr(self) -> float:
        """Molecule diffusivity relative to the receiver."""
        return self.D_m + self.D_rx

    @property
    def b(self) -> float:
        return self.k * self.D_tr * self.T_s ** self.alpha

    @property
    def sigma_k(self) -> float:
        return math.sqrt(2.0 * self.b)

    def a(self, t_h):
        return self.D_mr * np.asarray(t_h, dtype=float) ** self.alpha

    def with_(self, **changes) -> "MobileChannelParams":
        from dataclasses import replace
        return replace(self, **changes)


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_positive_time(t_h):
    t = np.asarray(t_h, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("t_h must be positive")
    return t


def static_fhtd(t_h, r0: float, D: float, alpha: float,
                variant: FhtdVariant = FhtdVariant.NORMALIZED):
    """Density of the first time a molecule starting ``r0`` away hits the RX."""
    t = _check_positive_time(t_h)
    if not (r0 > 0 and D > 0):
        raise ValueError("r0 and D must be positive")
    # log space: t**(alpha+2) underflows long before the density does
    log_t = np.log(t)
    with np.errstate(over="ignore"):
        log_f = (math.log(r0) - 0.5 * math.log(4.0 * math.pi * D) - 0.5 * (alpha + 2.0) * log_t
                 - r0 * r0 / (4.0 * D) * np.exp(-alpha * log_t))
    return _scalar_or_array(_variant_factor(alpha, variant) * np.exp(log_f))


def static_hitting_cdf(t, r0: float, D: float, alpha: float,
                       variant: FhtdVariant = FhtdVariant.NORMALIZED):
    """Closed-form integral of :func:`static_fhtd` from 0 to ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    if not (r0 > 0 and D > 0):
        raise ValueError("r0 and D must be positive")
    with np.errstate(divide="ignore"):
        arg = r0 / np.sqrt(4.0 * D * t ** alpha)
    cdf = special.erfc(arg)
    cdf = np.where(t > 0, cdf, 0.0)
    if variant is FhtdVariant.PRINTED:
        cdf = cdf / alpha
    return _scalar_or_array(cdf)


def distance_pdf(r_k, params: MobileChannelParams):
    """Density of the TX-RX distance at the ``k``-th sampling instant.

    Folded normal: the law of ``|N(r0, sigma_k**2)|``.
    """
    r = np.asarray(r_k, dtype=float)
    if np.any(r < 0):
        raise ValueError("r_k must be non-negative")
    s = params.sigma_k
    if s == 0:
        raise ValueError("sigma_k is zero: the distance is deterministic, use the static path")
    r0 = params.r0
    norm = 1.0 / (s * math.sqrt(2.0 * math.pi))
    pdf = norm * (np.exp(-0.5 * ((r - r0) / s) ** 2) + np.exp(-0.5 * ((r + r0) / s) ** 2))
    return _scalar_or_array(pdf)


def distance_cdf(r_k, params: MobileChannelParams):
    """CDF of the folded-normal TX-RX distance."""
    r = np.maximum(np.asarray(r_k, dtype=float), 0.0)
    s = params.sigma_k * math.sqrt(2.0)
    cdf = 0.5 * (special.erf((r - params.r0) / s) + special.erf((r + params.r0) / s))
    return _scalar_or_array(cdf)


def mobile_fhtd_quadrature(t_h: float, params: MobileChannelParams,
                           variant: FhtdVariant = FhtdVariant.NORMALIZED,
                           quad: QuadratureSettings = DEFAULT_QUAD) -> float:
    """Average the static density over the folded-normal distance by quadrature."""
    if not t_h > 0:
        raise ValueError("t_h must be positive")
    s = params.sigma_k
    if s == 0:
        raise ValueError("D_tr is zero: use static_fhtd with D_mr")
    r0, alpha = params.r0, params.alpha
    a = float(params.a(t_h))
    b = params.b
    hi = r0 + R_TRUNCATION_SIGMAS * s
    factor = _variant_factor(alpha, variant)
    norm = 1.0 / (s * math.sqrt(2.0 * math.pi))
    pre = factor / (t_h * math.sqrt(4.0 * math.pi * a))

    def integrand(r):
        if r <= 0:
            return 0.0
        fold = math.exp(-0.5 * ((r - r0) / s) ** 2) + math.exp(-0.5 * ((r + r0) / s) ** 2)
        return pre * r * math.exp(-r * r / (4.0 * a)) * norm * fold

    # candidate peaks: distance mode, posterior mean, and the static-kernel mode
    marks = sorted({r0, r0 * a / (a + b), math.sqrt(2.0 * a), math.sqrt(a * b / (a + b))})
    marks = [m for m in marks if 0 < m < hi]
    probe = [integrand(m) for m in marks + list(np.linspace(0, hi, 65)[1:])]
    scale = max(probe)
    if scale == 0:
        return 0.0
    # rescaled so abs_tol acts relative to the integrand's peak
    val, _ = adaptive_quad(lambda r: integrand(r) / scale, 0.0, hi, quad, points=marks)
    return val * scale


def mobile_fhtd_printed(t_h, params: MobileChannelParams):
    """Closed form exactly as published; singular at ``b = 0``."""
    t = _check_positive_time(t_h)
    b = params.b
    if b == 0:
        raise ValueError("printed closed form is singular at b = 0")
    r0 = params.r0
    a = params.a(t)
    with np.errstate(under="ignore"):
        term1 = a * b * math.exp(-r0 * r0 / (2.0 * b)) / (t * math.pi * (a + b))
        term2 = ((r0 / t) * np.sqrt(1.0 / (4.0 * math.pi * (a + b) ** 3))
                 * np.exp(-r0 * r0 / (4.0 * (a + b)))
                 * special.erf(0.5 * r0 * np.sqrt(a / (b * (a + b)))))
    return _scalar_or_array(term1 + term2)


def erf_argument(a, b: float, r0: float):
    return 0.5 * r0 * np.sqrt(a / (b * (a + b)))


def mobile_fhtd_corrected(t_h, params: MobileChannelParams,
                          variant: FhtdVariant = FhtdVariant.NORMALIZED):
    """Closed form of the distance-averaged density.

    Reduces exactly to :func:`static_fhtd` with ``D_mr`` when ``b = 0``.
    """
    t = _check_positive_time(t_h)
    b = params.b
    if b == 0:
        return static_fhtd(t, params.r0, params.D_mr, params.alpha, variant)
    r0 = params.r0
    a = params.a(t)
    apb = a + b
    with np.errstate(under="ignore"):
        term1 = np.sqrt(a * b) * math.exp(-r0 * r0 / (4.0 * b)) / (math.pi * t * apb)
        term2 = (r0 * a / (2.0 * SQRT_PI * t * apb ** 1.5) * np.exp(-r0 * r0 / (4.0 * apb))
                 * special.erf(erf_argument(a, b, r0)))
    return _scalar_or_array(_variant_factor(params.alpha, variant) * (term1 + term2))


def mobile_fhtd(t_h, params: MobileChannelParams,
                variant: FhtdVariant = FhtdVariant.NORMALIZED,
                form: ClosedForm = ClosedForm.CORRECTED,
                quad: QuadratureSettings = DEFAULT_QUAD):
    """Mobile density by the selected route; static devices short-circuit."""
    if params.b == 0:
        return static_fhtd(t_h, params.r0, params.D_mr, params.alpha, variant)
    if form is ClosedForm.CORRECTED:
        return mobile_fhtd_corrected(t_h, params, variant)
    if form is ClosedForm.PRINTED:
        return _variant_factor(params.alpha, variant) * mobile_fhtd_printed(t_h, params)
    if np.ndim(t_h) == 0:
        return mobile_fhtd_quadrature(float(t_h), params, variant, quad)
    return np.array([mobile_fhtd_quadrature(float(t), params, variant, quad)
                     for t in np.ravel(t_h)]).reshape(np.shape(t_h))


def _density(params, variant, form, quad) -> Callable[[float], float]:
    return lambda t: float(mobile_fhtd(t, params, variant, form, quad)) if t > 0 else 0.0


def integrate_from_zero(f: Callable[[float], float], t: float, alpha: float,
                        quad: QuadratureSettings = DEFAULT_QUAD,
                        substitute: bool | None = None) -> float:
    """Integrate a hitting-time density over ``[0, t]``.

    Mobile densities behave like ``t**(alpha/2 - 1)`` near zero. With
    ``substitute=None`` the plain integral is tried first and, if the integrator
    gives up, redone in ``u = t**(alpha/2)`` where the integrand is bounded.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return 0.0
    if not substitute:
        try:
            return adaptive_quad(f, 0.0, t, quad)[0]
        except QuadratureError:
            if substitute is False:
                raise
    p = 2.0 / alpha

    def g(u):
        if u <= 0:
            return 0.0
        return f(u ** p) * p * u ** (p - 1.0)

    return adaptive_quad(g, 0.0, t ** (alpha / 2.0), quad)[0]


def hitting_cdf(t: float, params: MobileChannelParams,
                variant: FhtdVariant = FhtdVariant.NORMALIZED,
                quad: QuadratureSettings = DEFAULT_QUAD,
                form: ClosedForm = ClosedForm.CORRECTED) -> float:
    """Probability that the molecule has hit the RX by time ``t`` after release."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if params.b == 0:
        return float(static_hitting_cdf(t, params.r0, params.D_mr, params.alpha, variant))
    return integrate_from_zero(_density(params, variant, form, quad), t, params.alpha, quad)


@dataclass(frozen=True)
class HittingCurve:
    grid: np.ndarray
    values: np.ndarray
    tail_mass: float

    def __call__(self, t):
        """Linear interpolation of the tabulated CDF, 0 before release."""
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.grid, self.values, left=0.0)
        return _scalar_or_array(np.where(t < 0, 0.0, out))


def hitting_curve(grid, params: MobileChannelParams,
                  variant: FhtdVariant = FhtdVariant.NORMALIZED,
                  quad: QuadratureSettings = DEFAULT_QUAD,
                  form: ClosedForm = ClosedForm.CORRECTED,
                  total: "HittingTotal | None" = None) -> HittingCurve:
    """Tabulate the hitting CDF on an ascending grid by summing interval integrals."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0) or np.any(grid < 0):
        raise ValueError("grid must be ascending and non-negative")
    if params.b == 0:
        values = np.asarray(static_hitting_cdf(grid, params.r0, params.D_mr, params.alpha,
                                               variant), dtype=float)
    else:
        f = _density(params, variant, form, quad)
        values = np.empty_like(grid)
        acc, prev = 0.0, 0.0
        for i, t in enumerate(grid):
            if prev == 0.0:
                acc = integrate_from_zero(f, t, params.alpha, quad)
            else:
                acc += adaptive_quad(f, prev, t, quad)[0]
            values[i] = acc
            prev = t
        values = np.maximum.accumulate(values)
    if total is None:
        total = hitting_prob_total(params, variant, quad, form=form)
    return HittingCurve(grid, values, max(total.total - float(values[-1]), 0.0))


class HittingTotal(NamedTuple):
    integrated: float
    tail: float

    @property
    def total(self) -> float:
        return self.integrated + self.tail


def hitting_prob_total(params: MobileChannelParams,
                       variant: FhtdVariant = FhtdVariant.NORMALIZED,
                       quad: QuadratureSettings = DEFAULT_QUAD,
                       horizon: float = 100.0, tail_tol: float = 1e-4,
                       form: ClosedForm = ClosedForm.CORRECTED) -> HittingTotal:
    """Eventual hitting probability ``F_h(inf)`` by improper quadrature.

    The horizon doubles until the extrapolated remaining mass is below
    ``tail_tol``; a :class:`~mobile_mc.numerics.QuadratureError` reports a horizon
    budget that ran out first.
    """
    if form is ClosedForm.PRINTED:
        raise ValueError("the printed closed form is not integrable on [0, inf)")
    f = _density(params, variant, form, quad)
    head = hitting_cdf(horizon, params, variant, quad, form)
    rest, tail = improper_quad(f, horizon, quad, horizon=2.0 * horizon, tol=tail_tol)
    return HittingTotal(head + rest, tail)


def decision_threshold_eta(params: MobileChannelParams,
                           variant: FhtdVariant = FhtdVariant.NORMALIZED,
                           quad: QuadratureSettings = DEFAULT_QUAD,
                           form: ClosedForm = ClosedForm.CORRECTED,
                           conditional: bool = False) -> float:
    """Decision threshold: first moment of the hitting time over ``[0, T_s]``.

    The literal moment is not divided by ``F_h(T_s)``; ``conditional=True`` gives
    the mean hitting time given a hit within ``T_s`` instead.
    """
    f = _density(params, variant, form, quad)
    moment = integrate_from_zero(lambda t: t * f(t), params.T_s, params.alpha, quad)
    if not conditional:
        return moment
    mass = hitting_cdf(params.T_s, params, variant, quad, form)
    return moment / mass if mass > 0 else 0.0
