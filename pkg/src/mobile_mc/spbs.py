"""Particle-based simulation of the mobile channel in one dimension.

Every trial follows one molecule together with its own TX and RX. The TX starts
at ``z_tx0`` and the RX ``r0`` to its right. Devices take Gaussian steps; when a
proposed step would make them cross or touch, both go back to where they were.
The molecule leaves from the TX position at the release time and is absorbed
the first time it reaches the RX.

Trials are processed in fixed-size blocks. Block ``j`` draws from its own
stream seeded by ``(seed, j)`` and always draws a full block of variates per
step, so the path of trial ``i`` depends only on ``seed`` and ``i``. Worker
count and the total number of trials do not change it.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .fhtd import MobileChannelParams
from .kinematics import DiffusionSpec, IncrementScheme, increment_variance

BLOCK_SIZE = 2048
_GRID_TOL = 1e-9


def _steps(duration: float, dt: float, what: str) -> int:
    n = duration / dt
    if abs(n - round(n)) > _GRID_TOL * max(1.0, n):
        raise ValueError(f"{what} ({duration}) must be a whole number of steps of {dt}")
    return int(round(n))


@dataclass(frozen=True)
class SimConfig:
    params: MobileChannelParams
    dt: float = 0.5
    n_particles: int = 10_000
    horizon: float = 100.0
    seed: int = 0
    scheme: IncrementScheme = IncrementScheme.EXACT
    # None: release at k * T_s
    release_time: float | None = None
    release_delay: bool = False
    # keep enforcing the TX/RX no-crossing rule once the molecule is out
    collisions_after_release: bool = False
    bridge: bool = False
    z_tx0: float = 0.0

    def __post_init__(self):
        if not isinstance(self.scheme, IncrementScheme):
            raise TypeError("scheme must be an IncrementScheme")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ValueError("n_particles must be a positive integer")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0 <= self.t_release < self.horizon:
            raise ValueError("need 0 <= release_time < horizon")
        _steps(self.t_release, self.dt, "release time")
        _steps(self.horizon, self.dt, "horizon")
        if self.scheme is IncrementScheme.EXACT and self.params.alpha != 1:
            _steps(self.params.T_s, self.dt, "T_s")
        if self.bridge and self.params.alpha != 1:
            raise ValueError("the bridge correction is exact only for alpha = 1")

    @property
    def t_release(self) -> float:
        if self.release_time is not None:
            return self.release_time
        return self.params.k * self.params.T_s

    @property
    def n_steps(self) -> int:
        return _steps(self.horizon, self.dt, "horizon")


@dataclass
class WorldState:
    """Positions of a batch of trials (arrays) or of one trial (0-d arrays)."""

    z_tx: np.ndarray
    z_rx: np.ndarray
    z_m: np.ndarray
    t: float
    released: np.ndarray
    prev_z_tx: np.ndarray = None
    prev_z_rx: np.ndarray = None

    def __post_init__(self):
        for name in ("z_tx", "z_rx", "z_m"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.released = np.asarray(self.released, dtype=bool)
        if self.prev_z_tx is None:
            self.prev_z_tx = self.z_tx.copy()
        if self.prev_z_rx is None:
            self.prev_z_rx = self.z_rx.copy()

    @classmethod
    def initial(cls, n: int, z_tx0: float, r0: float) -> "WorldState":
        z_tx = np.full(n, z_tx0, dtype=float)
        return cls(z_tx=z_tx, z_rx=z_tx + r0, z_m=np.full(n, np.nan),
                   t=0.0, released=np.zeros(n, dtype=bool))


@dataclass
class SimOutcome:
    hit_times: np.ndarray
    n_particles: int
    n_censored: int
    n_collision_reverts: int
    release_distances: np.ndarray = field(repr=False)
    horizon: float = math.inf
    release_time: float = 0.0

    @property
    def censored_fraction(self) -> float:
        return self.n_censored / self.n_particles


def step_devices(state: WorldState, dz_tx, dz_rx, active=None):
    """Propose device steps; trials whose devices would cross or touch revert.

    Returns ``(new_state, reverted)`` where ``reverted`` marks trials that kept
    their previous positions.
    """
    prop_tx = state.z_tx + dz_tx
    prop_rx = state.z_rx + dz_rx
    reverted = prop_tx >= prop_rx
    if active is not None:
        reverted &= active
        move = active & ~reverted
    else:
        move = ~reverted
    new = replace(state,
                  z_tx=np.where(move, prop_tx, state.z_tx),
                  z_rx=np.where(move, prop_rx, state.z_rx),
                  prev_z_tx=state.z_tx, prev_z_rx=state.z_rx)
    return new, reverted


def release_molecule(state: WorldState, which=None) -> WorldState:
    """Place the molecule at the current TX position for the selected trials."""
    which = np.ones_like(state.released) if which is None else np.asarray(which, dtype=bool)
    if np.any(which & state.released):
        raise ValueError("molecule already released")
    return replace(state, z_m=np.where(which, state.z_tx, state.z_m),
                   released=state.released | which)


def step_molecule_and_detect(state: WorldState, dz_m, dz_tx, dz_rx, dt: float,
                             active=None, bridge_u=None, bridge_var=None,
                             collide=None):
    """Advance devices and molecule one step and test for absorption.

    A trial is hit when ``z_m - z_rx`` changes sign over the step or is zero at
    its end; the hit is timed at the step end. With ``bridge_u`` and
    ``bridge_var`` (variance of the relative increment), a trial that stays on
    one side is still hit with the Brownian-bridge crossing probability
    ``exp(-2 d0 d1 / var)``. Trials outside ``collide`` (default: all) move
    their devices freely, without the no-crossing rule.

    Returns ``(new_state, hit, reverted)``.
    """
    movers = state.released if active is None else (state.released & active)
    d0 = state.z_m - state.z_rx
    guarded = active if collide is None else (collide if active is None else active & collide)
    new, reverted = step_devices(state, dz_tx, dz_rx, guarded)
    if collide is not None:
        free = ~collide if active is None else (active & ~collide)
        new = replace(new, z_tx=np.where(free, state.z_tx + dz_tx, new.z_tx),
                      z_rx=np.where(free, state.z_rx + dz_rx, new.z_rx))
    z_m = np.where(movers, state.z_m + dz_m, state.z_m)
    new = replace(new, z_m=z_m, t=state.t + dt)
    d1 = z_m - new.z_rx
    hit = movers & ((np.sign(d1) != np.sign(d0)) | (d1 == 0))
    if bridge_u is not None:
        with np.errstate(over="ignore", invalid="ignore"):
            p_cross = np.exp(-2.0 * d0 * d1 / bridge_var)
        hit |= movers & ~hit & (bridge_u < p_cross)
    return new, hit, reverted


def _variances(spec: DiffusionSpec, clock, dt, scheme):
    return increment_variance(spec, clock, dt, scheme)


def _run_block(config: SimConfig, block: int, count: int):
    p = config.params
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(block,))))
    specs = [DiffusionSpec(p.alpha, D) for D in (p.D_m, p.D_tx, p.D_rx)]
    dt, scheme = config.dt, config.scheme
    state = WorldState.initial(count, config.z_tx0, p.r0)
    hit_time = np.full(count, np.nan)
    release_at = np.full(count, np.nan)
    release_dist = np.full(count, np.nan)
    active = np.ones(count, dtype=bool)
    last_reverted = np.zeros(count, dtype=bool)
    n_reverts = 0
    rel_step = _steps(config.t_release, dt, "release time")
    per_interval = max(_steps(p.T_s, dt, "T_s"), 1) if scheme is IncrementScheme.EXACT \
        and p.alpha != 1 else 1

    for s in range(config.n_steps):
        t0 = s * dt
        z = rng.standard_normal((3, BLOCK_SIZE))[:, :count]
        u = rng.random(BLOCK_SIZE)[:count] if config.bridge else None

        if s >= rel_step:
            todo = ~state.released
            if config.release_delay:
                todo &= ~last_reverted
            if np.any(todo):
                release_dist[todo] = (state.z_rx - state.z_tx)[todo]
                release_at[todo] = t0
                state = release_molecule(state, todo)

        # device clocks restart at each sampling instant before release and at
        # release afterwards; the molecule clock starts at release
        if np.all(state.released):
            clock = t0 - release_at
        else:
            pre = (s % per_interval) * dt
            clock = np.where(state.released, t0 - np.nan_to_num(release_at), pre)
        v_m, v_tx, v_rx = (_variances(sp, clock, dt, scheme) for sp in specs)
        dz_m, dz_tx, dz_rx = z[0] * np.sqrt(v_m), z[1] * np.sqrt(v_tx), z[2] * np.sqrt(v_rx)

        bridge_var = (v_m + v_rx) if config.bridge else None
        collide = None if config.collisions_after_release else ~state.released
        state, hit, reverted = step_molecule_and_detect(state, dz_m, dz_tx, dz_rx, dt, active,
                                                        u, bridge_var, collide)
        n_reverts += int(np.count_nonzero(reverted))
        last_reverted = reverted
        if np.any(hit):
            hit_time[hit] = (t0 + dt) - release_at[hit]
            active &= ~hit
            if not np.any(active):
                break
    return hit_time, release_dist, n_reverts


def _blocks(n: int):
    return [(j, min(BLOCK_SIZE, n - j * BLOCK_SIZE)) for j in range(-(-n // BLOCK_SIZE))]


def simulate_fhtd(config: SimConfig, workers: int = 1) -> SimOutcome:
    """Run all trials and collect first-hitting times measured from release."""
    blocks = _blocks(config.n_particles)
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, [config] * len(blocks),
                                    [j for j, _ in blocks], [c for _, c in blocks]))
    else:
        results = [_run_block(config, j, c) for j, c in blocks]
    times = np.concatenate([r[0] for r in results])
    dists = np.concatenate([r[1] for r in results])
    hits = times[~np.isnan(times)]
    return SimOutcome(hit_times=hits, n_particles=config.n_particles,
                      n_censored=int(np.count_nonzero(np.isnan(times))),
                      n_collision_reverts=int(sum(r[2] for r in results)),
                      release_distances=dists, horizon=config.horizon,
                      release_time=config.t_release)


def empirical_cdf(outcome: SimOutcome, t):
    """Fraction of all trials hit by ``t``; censored trials count as misses."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    srt = np.sort(outcome.hit_times)
    out = np.searchsorted(srt, t, side="right") / outcome.n_particles
    return float(out) if out.ndim == 0 else out


def histogram_density(outcome: SimOutcome, edges):
    """Hit-time density per bin, normalised by the total number of trials."""
    counts, edges = np.histogram(outcome.hit_times, bins=edges)
    return counts, counts / (outcome.n_particles * np.diff(edges))
