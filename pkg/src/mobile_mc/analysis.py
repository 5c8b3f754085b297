"""Pipelines that turn channel parameters into figure tables and channel metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scipy.integrate import trapezoid

from .channel import TimingScheme, TransitionProbs, maximize_air, transition_probs
from .fhtd import (ClosedForm, FhtdVariant, MobileChannelParams, decision_threshold_eta,
                   distance_cdf, distance_pdf, hitting_cdf, hitting_prob_total,
                   mobile_fhtd_corrected, mobile_fhtd_printed, mobile_fhtd_quadrature,
                   static_fhtd)
from .numerics import DEFAULT_QUAD, QuadratureSettings


@dataclass(frozen=True)
class ChannelResult:
    params: MobileChannelParams
    scheme: TimingScheme
    probs: TransitionProbs
    F_total: float
    beta_star: float
    air: float


def channel_probs(params: MobileChannelParams, T1: float, Tu: float,
                  variant: FhtdVariant = FhtdVariant.NORMALIZED,
                  form: ClosedForm = ClosedForm.CORRECTED,
                  quad: QuadratureSettings = DEFAULT_QUAD,
                  eta_conditional: bool = False,
                  eta: float | None = None) -> tuple[TimingScheme, TransitionProbs, float]:
    """Timing scheme and BEC transition probabilities for one parameter set."""
    if eta is None:
        eta = decision_threshold_eta(params, variant, quad, form, conditional=eta_conditional)
    scheme = TimingScheme(T1=T1, Tu=Tu, eta=eta)
    total = hitting_prob_total(params, variant, quad, form=form).total
    clip = variant is FhtdVariant.PRINTED
    probs = transition_probs(scheme, lambda x: hitting_cdf(x, params, variant, quad, form),
                             total, clip=clip)
    return scheme, probs, min(total, 1.0) if clip else total


def analyze_channel(params: MobileChannelParams, T1: float, Tu: float,
                    variant: FhtdVariant = FhtdVariant.NORMALIZED,
                    form: ClosedForm = ClosedForm.CORRECTED,
                    quad: QuadratureSettings = DEFAULT_QUAD,
                    eta_conditional: bool = False,
                    tol: float = 1e-9, eta: float | None = None) -> ChannelResult:
    """Channel probabilities plus the capacity-achieving input for one parameter set."""
    scheme, probs, total = channel_probs(params, T1, Tu, variant, form, quad,
                                         eta_conditional, eta)
    beta, air = maximize_air(probs, tol)
    return ChannelResult(params, scheme, probs, total, beta, air)


def fhtd_table(times, params: MobileChannelParams,
               variant: FhtdVariant = FhtdVariant.NORMALIZED,
               quad: QuadratureSettings = DEFAULT_QUAD) -> dict[str, np.ndarray]:
    """Printed closed form, corrected closed form and quadrature on a time grid.

    For static devices the printed column holds the static density, which the
    printed closed form is claimed to reduce to.
    """
    times = np.asarray(times, dtype=float)
    factor = params.alpha if variant is FhtdVariant.NORMALIZED else 1.0
    if params.b == 0:
        static = np.asarray(static_fhtd(times, params.r0, params.D_mr, params.alpha, variant))
        return {"printed": static, "corrected": static.copy(), "quadrature": static.copy()}
    printed = factor * np.asarray(mobile_fhtd_printed(times, params))
    corrected = np.asarray(mobile_fhtd_corrected(times, params, variant))
    quadv = np.array([mobile_fhtd_quadrature(float(t), params, variant, quad) for t in times])
    return {"printed": printed, "corrected": corrected, "quadrature": quadv}


def distance_pdf_table(r_grid, params: MobileChannelParams) -> tuple[np.ndarray, float]:
    """Distance density on ``r_grid`` and its trapezoid integral plus the analytic tail."""
    r_grid = np.asarray(r_grid, dtype=float)
    pdf = np.asarray(distance_pdf(r_grid, params))
    mass = float(trapezoid(pdf, r_grid)) + (1.0 - float(distance_cdf(r_grid[-1], params)))
    return pdf, mass
