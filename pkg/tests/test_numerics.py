import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mobile_mc.numerics import (OptimizationError, QuadratureError, QuadratureSettings,
                                adaptive_quad, erf_pair, improper_quad, maximize_unimodal)


def test_settings_defaults_and_validation():
    s = QuadratureSettings()
    assert (s.abs_tol, s.rel_tol, s.max_subdivisions, s.horizon_growth) == (1e-12, 1e-10, 2000, 2.0)
    with pytest.raises(ValueError):
        QuadratureSettings(abs_tol=-1)
    with pytest.raises(ValueError):
        QuadratureSettings(horizon_growth=1.0)


def test_adaptive_quad_polynomial_and_gaussian():
    val, err = adaptive_quad(lambda x: x ** 3, 0.0, 2.0)
    assert val == pytest.approx(4.0, rel=1e-13)
    val, _ = adaptive_quad(lambda x: math.exp(-x * x), -10.0, 10.0)
    assert val == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_adaptive_quad_flags_non_integrable_singularity():
    with pytest.raises(QuadratureError):
        adaptive_quad(lambda x: 1.0 / x if x > 0 else 0.0, 0.0, 1.0,
                      QuadratureSettings(max_subdivisions=20))


def test_improper_quad_exponential_and_power_tail():
    val, tail = improper_quad(lambda x: math.exp(-x), 0.0, tol=1e-10)
    assert val + tail == pytest.approx(1.0, abs=1e-9)
    # t^-3/2 tail: the slowest decay a hitting-time density shows
    val, tail = improper_quad(lambda x: 0.5 * (1 + x) ** -1.5, 0.0, horizon=10.0, tol=1e-4)
    assert val + tail == pytest.approx(1.0, abs=1e-3)


def test_improper_quad_diverging_raises():
    with pytest.raises(QuadratureError):
        improper_quad(lambda x: 1.0 / (1.0 + x), 0.0, tol=1e-6, max_growths=30)


@given(st.floats(min_value=-6.0, max_value=6.0))
@settings(max_examples=60, deadline=None)
def test_erf_pair_matches_mpmath(x):
    e, ec = erf_pair(x)
    assert e == pytest.approx(float(mpmath.erf(x)), rel=1e-14, abs=1e-300)
    assert ec == pytest.approx(float(mpmath.erfc(x)), rel=1e-13, abs=1e-300)


def test_erfc_deep_tail_has_no_cancellation():
    assert erf_pair(25.0)[1] == pytest.approx(float(mpmath.erfc(25)), rel=1e-13)


@given(st.floats(min_value=0.01, max_value=0.99))
@settings(max_examples=40, deadline=None)
def test_maximize_unimodal_parabola(c):
    x, y = maximize_unimodal(lambda b: -(b - c) ** 2, 0.0, 1.0, tol=1e-10)
    assert x == pytest.approx(c, abs=1e-8)
    assert y == pytest.approx(0.0, abs=1e-15)


def test_maximize_unimodal_endpoint_maximum():
    x, y = maximize_unimodal(lambda b: b, 0.0, 1.0)
    assert x == pytest.approx(1.0, abs=1e-8)


def test_maximize_unimodal_rejects_two_peaks():
    g = lambda b: np.exp(-((b - 0.2) / 0.05) ** 2) + np.exp(-((b - 0.8) / 0.05) ** 2)
    with pytest.raises(OptimizationError):
        maximize_unimodal(g, 0.0, 1.0)
