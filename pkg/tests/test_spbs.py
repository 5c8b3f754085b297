import math

import numpy as np
import pytest
from scipy import special, stats

from mobile_mc.fhtd import MobileChannelParams, distance_cdf
from mobile_mc.spbs import (BLOCK_SIZE, SimConfig, WorldState, empirical_cdf,
                            histogram_density, release_molecule, simulate_fhtd, step_devices,
                            step_molecule_and_detect)

BASE = MobileChannelParams(D_m=5.0, D_tx=0.0, D_rx=0.0, alpha=1.0, T_s=1.0, k=1, r0=10.0)


def test_config_validation():
    with pytest.raises(ValueError, match="whole number"):
        SimConfig(BASE, dt=0.3, horizon=10.0)
    with pytest.raises(ValueError, match="bridge"):
        SimConfig(BASE.with_(alpha=0.8), dt=0.5, bridge=True)
    with pytest.raises(ValueError):
        SimConfig(BASE, horizon=1.0)  # release at k T_s = horizon
    with pytest.raises(TypeError):
        SimConfig(BASE, scheme="exact")
    assert SimConfig(BASE, dt=0.5, horizon=10.0).n_steps == 20


def test_devices_revert_on_crossing_or_touching():
    s = WorldState.initial(3, 0.0, 1.0)
    new, rev = step_devices(s, np.array([0.5, 0.5, 0.0]), np.array([0.0, -0.5, 0.0]))
    assert rev.tolist() == [False, True, False]
    assert new.z_tx.tolist() == [0.5, 0.0, 0.0]
    assert new.z_rx.tolist() == [1.0, 1.0, 1.0]


def test_double_release_raises():
    s = release_molecule(WorldState.initial(2, 0.0, 1.0), np.array([True, False]))
    assert s.z_m[0] == 0.0 and np.isnan(s.z_m[1])
    with pytest.raises(ValueError):
        release_molecule(s)


def test_detection_on_sign_change_and_exact_touch():
    s = release_molecule(WorldState.initial(3, 0.0, 1.0))
    dz_m = np.array([1.5, 1.0, 0.5])
    zero = np.zeros(3)
    _, hit, _ = step_molecule_and_detect(s, dz_m, zero, zero, 0.1)
    assert hit.tolist() == [True, True, False]


def test_bridge_crossing_probability():
    s = release_molecule(WorldState.initial(2, 0.0, 1.0))
    zero = np.zeros(2)
    p = math.exp(-2 * 1.0 * 0.5 / 2.0)  # d0 = -1, d1 = -0.5, var = 2
    u = np.array([p - 1e-9, p + 1e-9])
    _, hit, _ = step_molecule_and_detect(s, np.full(2, 0.5), zero, zero, 0.1,
                                         bridge_u=u, bridge_var=np.full(2, 2.0))
    assert hit.tolist() == [True, False]


def test_trial_paths_do_not_depend_on_batch_size():
    p = BASE.with_(D_tx=5.0, D_rx=5.0)
    small = simulate_fhtd(SimConfig(p, dt=0.5, n_particles=10, horizon=3.0, seed=4))
    big = simulate_fhtd(SimConfig(p, dt=0.5, n_particles=BLOCK_SIZE + 10, horizon=3.0, seed=4))
    np.testing.assert_array_equal(small.release_distances, big.release_distances[:10])


def test_workers_do_not_change_results():
    cfg = SimConfig(BASE.with_(D_tx=1.0, D_rx=1.0), dt=0.5, n_particles=2 * BLOCK_SIZE + 7,
                    horizon=20.0, seed=9)
    a, b = simulate_fhtd(cfg, 1), simulate_fhtd(cfg, 2)
    np.testing.assert_array_equal(a.hit_times, b.hit_times)
    assert (a.n_censored, a.n_collision_reverts) == (b.n_censored, b.n_collision_reverts)


def test_different_seeds_differ():
    cfg = SimConfig(BASE, dt=0.5, n_particles=500, horizon=20.0, seed=1)
    other = SimConfig(BASE, dt=0.5, n_particles=500, horizon=20.0, seed=2)
    assert not np.array_equal(simulate_fhtd(cfg).hit_times, simulate_fhtd(other).hit_times)


def test_static_hitting_cdf_statistics():
    n = 20_000
    out = simulate_fhtd(SimConfig(BASE, dt=0.1, n_particles=n, horizon=6.0, seed=3,
                                  bridge=True))
    ref = special.erfc(1.0)
    sd = math.sqrt(ref * (1 - ref) / n)
    assert abs(empirical_cdf(out, 5.0) - ref) <= 4 * sd + 2e-3
    assert out.n_censored + out.hit_times.size == n
    assert np.all(out.hit_times > 0)


def test_frozen_molecule_is_hit_by_moving_receiver():
    p = BASE.with_(D_m=0.0, D_rx=5.0)
    out = simulate_fhtd(SimConfig(p, dt=0.5, n_particles=2000, horizon=50.0, seed=5,
                                  release_time=0.0))
    assert 0.5 < out.hit_times.size / 2000 < 1.0
    none = simulate_fhtd(SimConfig(BASE.with_(D_m=0.0), dt=0.5, n_particles=50, horizon=5.0))
    assert none.hit_times.size == 0 and none.censored_fraction == 1.0


def test_exact_scheme_release_distance_law_subdiffusive():
    p = BASE.with_(alpha=0.8, D_tx=1.0, D_rx=2.0, k=3, r0=30.0)
    out = simulate_fhtd(SimConfig(p, dt=0.25, n_particles=20_000, horizon=3.5, seed=6))
    ks = stats.kstest(out.release_distances, lambda r: distance_cdf(r, p)).statistic
    assert ks < 0.015


def test_histogram_density_normalisation():
    out = simulate_fhtd(SimConfig(BASE, dt=0.5, n_particles=1000, horizon=30.0, seed=8))
    edges = np.linspace(0.0, 29.0, 59)
    counts, dens = histogram_density(out, edges)
    assert counts.sum() == out.hit_times.size
    assert np.sum(dens * np.diff(edges)) == pytest.approx(out.hit_times.size / 1000)
