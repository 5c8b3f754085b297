import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mobile_mc.kinematics import (DiffusionSpec, IncrementScheme, increment_variance,
                                  instantaneous_diffusion, msd, position_law, sample_step)

EXACT, IID = IncrementScheme.EXACT, IncrementScheme.PAPER_IID


def test_spec_validation():
    with pytest.raises(ValueError):
        DiffusionSpec(alpha=0.0, D=1.0)
    with pytest.raises(ValueError):
        DiffusionSpec(alpha=2.5, D=1.0)
    with pytest.raises(ValueError):
        DiffusionSpec(alpha=1.0, D=-1.0)


def test_msd_and_instantaneous_diffusion():
    s = DiffusionSpec(alpha=0.5, D=5.0)
    assert msd(s, 4.0) == pytest.approx(20.0)
    assert instantaneous_diffusion(s, 4.0) == pytest.approx(0.5 * 5.0 / 2.0)
    with pytest.raises(ValueError):
        instantaneous_diffusion(s, 0.0)


def test_exact_increment_variance_hand_value():
    # 2 D ((t + dt)^a - t^a) = 10 (sqrt(2) - 1)
    v = increment_variance(DiffusionSpec(0.5, 5.0), 1.0, 1.0, EXACT)
    assert v == pytest.approx(10 * (math.sqrt(2) - 1), rel=1e-14)
    assert v == pytest.approx(4.1421, abs=5e-5)


def test_iid_increment_variance_ignores_clock():
    s = DiffusionSpec(0.5, 5.0)
    assert increment_variance(s, 7.0, 1.0, IID) == pytest.approx(10.0)


@given(st.floats(0.1, 2.0), st.integers(1, 50), st.floats(0.01, 1.0))
@settings(max_examples=50, deadline=None)
def test_exact_increments_telescope_to_msd(alpha, n, dt):
    s = DiffusionSpec(alpha, 3.0)
    t = np.arange(n) * dt
    total = float(np.sum(increment_variance(s, t, dt, EXACT)))
    assert total == pytest.approx(msd(s, n * dt), rel=1e-10)


def test_exact_equals_iid_for_normal_diffusion():
    s = DiffusionSpec(1.0, 5.0)
    t = np.linspace(0, 10, 11)
    np.testing.assert_allclose(increment_variance(s, t, 0.5, EXACT), 5.0)


def test_sample_step_moments():
    rng = np.random.default_rng(123)
    s = DiffusionSpec(1.0, 5.0)
    x = sample_step(s, 0.0, 0.5, EXACT, rng, size=10 ** 6)
    sd = math.sqrt(5.0)
    assert abs(x.mean()) <= 4 * sd / 1e3
    assert x.var() == pytest.approx(5.0, rel=0.02)


def test_position_law():
    mean, var = position_law(DiffusionSpec(0.8, 5.0), 3.0, 2, 1.5)
    assert mean == 3.0
    # clock restarts at every sampling instant: k independent T_s-intervals
    assert var == pytest.approx(2 * 2 * 5.0 * 1.5 ** 0.8)
