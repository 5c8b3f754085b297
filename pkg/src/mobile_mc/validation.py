"""Oracle checks shared by ``mobile-mc validate`` and the acceptance tests.

Each check returns a :class:`CheckResult`; sizes and tolerances default to the
values the acceptance criteria require.
"""

from __future__ import annotations

import itertools
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special, stats

from .analysis import analyze_channel, distance_pdf_table
from .channel import (TransitionProbs, binary_entropy, maximize_air, mi_curve,
                      mutual_information)
from .fhtd import (FhtdVariant, MobileChannelParams, distance_cdf, distance_pdf,
                   hitting_cdf, hitting_curve, mobile_fhtd_corrected, mobile_fhtd_printed,
                   mobile_fhtd_quadrature, static_fhtd)
from .kinematics import IncrementScheme
from .numerics import improper_quad
from .spbs import SimConfig, empirical_cdf, simulate_fhtd

N = FhtdVariant.NORMALIZED
P = FhtdVariant.PRINTED

ORACLE_ALPHAS = (0.5, 1.0, 1.1, 1.5)
ORACLE_TIMES = (0.5, 1.0, 2.0, 5.0, 10.0, 50.0)
ORACLE_KS = (1, 5)
ORACLE_MOBILITY = ((5.0, 1.0, 1.0), (5.0, 5.0, 5.0), (5.0, 0.0, 5.0))

# published parameter set: D_m = 5 um^2/s, r0 = 10 um, k = 1, T_s = 1 s, D_tx = 0
PUBLISHED = MobileChannelParams(D_m=5.0, D_tx=0.0, D_rx=0.0, alpha=1.0, T_s=1.0, k=1, r0=10.0)
FIG_ALPHAS = (0.8, 1.0, 1.1)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)


def _rel(x, ref):
    return abs(x - ref) / abs(ref)


def _oracle_grid():
    for alpha, t, k, (dm, dtx, drx) in itertools.product(ORACLE_ALPHAS, ORACLE_TIMES,
                                                         ORACLE_KS, ORACLE_MOBILITY):
        yield t, MobileChannelParams(D_m=dm, D_tx=dtx, D_rx=drx, alpha=alpha, T_s=1.0, k=k,
                                     r0=10.0)


def check_closed_form_vs_oracle(tol=1e-8, max_seconds=60.0) -> CheckResult:
    start = time.perf_counter()
    worst, where = 0.0, None
    n = 0
    for variant in (P, N):
        for t, p in _oracle_grid():
            ref = mobile_fhtd_quadrature(t, p, variant)
            err = _rel(mobile_fhtd_corrected(t, p, variant), ref)
            n += 1
            if err > worst:
                worst, where = err, (variant.value, t, p.alpha, p.k, p.D_m, p.D_tx, p.D_rx)
    elapsed = time.perf_counter() - start
    ok = worst <= tol and elapsed <= max_seconds
    return CheckResult("closed form vs quadrature oracle", ok,
                       f"{n} points, max rel err {worst:.3e} (tol {tol:g}) at {where}; "
                       f"{elapsed:.1f}s (limit {max_seconds:g}s)",
                       {"max_rel_err": worst, "seconds": elapsed, "points": n})


def check_printed_formula_audit(tol=1e-8) -> CheckResult:
    ratios = []
    worst_corr = 0.0
    for t, p in _oracle_grid():
        ref = mobile_fhtd_quadrature(t, p, P)
        ratios.append(mobile_fhtd_printed(t, p) / ref)
        worst_corr = max(worst_corr, _rel(mobile_fhtd_corrected(t, p, P), ref))
    ratios = np.array(ratios)
    ex = MobileChannelParams(D_m=5, D_tx=5, D_rx=5, alpha=1.0, T_s=1.0, k=1, r0=10.0)
    ex_ref = mobile_fhtd_quadrature(5.0, ex, P)
    ex_printed = mobile_fhtd_printed(5.0, ex)
    ok = worst_corr <= tol
    return CheckResult(
        "printed closed-form audit", ok,
        f"printed/oracle ratio spans [{ratios.min():.3e}, {ratios.max():.3e}], "
        f"median {np.median(ratios):.3f}; worked example t=5: printed {ex_printed:.6g} vs "
        f"oracle {ex_ref:.6g} (oracle/printed = {ex_ref / ex_printed:.2f}x); "
        f"corrected max rel err {worst_corr:.2e}",
        {"ratio_min": float(ratios.min()), "ratio_max": float(ratios.max()),
         "example_printed": ex_printed, "example_oracle": ex_ref,
         "corrected_max_rel_err": worst_corr})


def check_reduction(tol_exact=1e-12, tol_limit=1e-6) -> CheckResult:
    worst0 = worst_eps = 0.0
    for alpha in ORACLE_ALPHAS:
        for t in ORACLE_TIMES:
            base = MobileChannelParams(D_m=5.0, D_tx=0.0, D_rx=0.0, alpha=alpha, T_s=1.0, k=1,
                                       r0=10.0)
            for variant in (P, N):
                ref = static_fhtd(t, base.r0, base.D_mr, alpha, variant)
                if ref == 0:
                    continue
                worst0 = max(worst0, _rel(mobile_fhtd_corrected(t, base, variant), ref))
                a = float(base.a(t))
                # b = 1e-8 a with D_mr unchanged: all mobility on the TX side
                near = base.with_(D_tx=1e-8 * a / (base.k * base.T_s ** alpha))
                worst_eps = max(worst_eps, _rel(mobile_fhtd_corrected(t, near, variant), ref))
    ok = worst0 <= tol_exact and worst_eps <= tol_limit
    return CheckResult("reduction to the static density", ok,
                       f"b=0: max rel err {worst0:.2e} (tol {tol_exact:g}); "
                       f"b=1e-8 a: max rel err {worst_eps:.2e} (tol {tol_limit:g})",
                       {"b0": worst0, "b_eps": worst_eps})


def check_normalization(tol=1e-3) -> CheckResult:
    parts, ok, out = [], True, {}
    for alpha in (0.5, 1.0, 1.5):
        for variant, expect in ((P, 1.0 / alpha), (N, 1.0)):
            f = lambda t, v=variant, a=alpha: static_fhtd(t, 10.0, 5.0, a, v) if t > 0 else 0.0
            val, tail = improper_quad(f, 0.0, horizon=100.0, tol=1e-4)
            total = val + tail
            err = abs(total - expect)
            ok &= err <= tol
            out[(alpha, variant.value)] = total
            parts.append(f"alpha={alpha:g} {variant.value}: {total:.6f} (expect {expect:.6f})")
    return CheckResult("normalization law", ok, "; ".join(parts), out)


def _sup_distance(outcome, cdf) -> float:
    ts = np.sort(outcome.hit_times)
    if ts.size == 0:
        return 1.0
    F = cdf(ts)
    hi = np.arange(1, ts.size + 1) / outcome.n_particles
    lo = hi - 1.0 / outcome.n_particles
    d = max(np.max(np.abs(hi - F)), np.max(np.abs(lo - F)))
    # beyond the last hit the empirical CDF is flat up to the window end
    t_end = outcome.horizon - outcome.release_time
    return float(max(d, abs(hi[-1] - float(cdf(np.array([t_end]))[0]))))


def check_monte_carlo(n=200_000, dt=0.01, bridge=True, tol_static=0.01, tol_mobile=0.015,
                      window=20.0, seed=20240601, workers=1, max_seconds=300.0) -> CheckResult:
    start = time.perf_counter()
    static = PUBLISHED.with_(D_m=5.0)
    cfg = SimConfig(static, dt=dt, n_particles=n, horizon=static.k * static.T_s + window,
                    seed=seed, bridge=bridge)
    out = simulate_fhtd(cfg, workers)
    sup = _sup_distance(out, lambda t: special.erfc(10.0 / np.sqrt(4.0 * 5.0 * t)))
    mobile = PUBLISHED.with_(D_tx=5.0, D_rx=5.0)
    cfg_m = SimConfig(mobile, dt=dt, n_particles=n, horizon=mobile.k * mobile.T_s + window,
                      seed=seed + 1, bridge=bridge)
    out_m = simulate_fhtd(cfg_m, workers)
    diffs = {t: empirical_cdf(out_m, t) - hitting_cdf(t, mobile, N) for t in (2, 5, 10, 20)}
    worst = max(abs(v) for v in diffs.values())
    elapsed = time.perf_counter() - start
    ok = sup <= tol_static and worst <= tol_mobile and elapsed <= max_seconds
    return CheckResult(
        "Monte Carlo ground truth", ok,
        f"static sup|F_emp - erfc| = {sup:.4f} (tol {tol_static:g}); mobile max "
        f"|F_emp - F_h| at t=2,5,10,20 = {worst:.4f} (tol {tol_mobile:g}) "
        f"[{', '.join(f'{d:+.4f}' for d in diffs.values())}]; n={n}, dt={dt:g}, "
        f"bridge={bridge}; {elapsed:.0f}s",
        {"static_sup": sup, "mobile_max": worst, "seconds": elapsed})


def check_distance_law(n=100_000, tol_ks=0.01, tol_mass=1e-6, seed=7, workers=1) -> CheckResult:
    parts, ok, out = [], True, {}
    # (D_tx, D_rx, r0): r0 large enough that the no-crossing rule never fires
    for d_tx, d_rx, r0 in ((1.0, 1.0, 10.0), (5.0, 5.0, 40.0)):
        p = PUBLISHED.with_(D_tx=d_tx, D_rx=d_rx, r0=r0)
        cfg = SimConfig(p, dt=p.T_s, n_particles=n, horizon=p.k * p.T_s + p.T_s, seed=seed,
                        scheme=IncrementScheme.PAPER_IID)
        sim = simulate_fhtd(cfg, workers)
        ks = stats.kstest(sim.release_distances, lambda r: distance_cdf(r, p)).statistic
        ok &= ks <= tol_ks
        out[f"ks_{d_tx:g}_{d_rx:g}"] = ks
        parts.append(f"KS(D_tx={d_tx:g},D_rx={d_rx:g},r0={r0:g}) = {ks:.4f}")
    for d in (1.0, 5.0):
        p = PUBLISHED.with_(D_tx=d, D_rx=d)
        r = np.linspace(0.0, p.r0 + 12.0 * p.sigma_k, 401)
        _, mass = distance_pdf_table(r, p)
        pdf0 = distance_pdf(0.0, p)
        ok &= abs(mass - 1.0) <= tol_mass and pdf0 > 0
        out[f"mass_{d:g}"] = mass
        parts.append(f"D={d:g}: grid mass {mass:.9f}, pdf(0) = {pdf0:.3e}")
    peak1 = distance_pdf(10.0, PUBLISHED.with_(D_tx=1.0, D_rx=1.0))
    peak5 = distance_pdf(10.0, PUBLISHED.with_(D_tx=5.0, D_rx=5.0))
    ok &= peak5 < peak1
    parts.append(f"peak at r0: {peak1:.4f} (D=1) > {peak5:.4f} (D=5)")
    return CheckResult("distance law", ok, "; ".join(parts), out)


def check_hitting_orderings(window=(2.0, 20.0), variant=P) -> CheckResult:
    times = np.linspace(window[0], window[1], 19)
    parts, ok = [], True
    for d_rx, expect_up in ((0.5, True), (50.0, False)):
        curves = [hitting_curve(times, PUBLISHED.with_(alpha=a, D_rx=d_rx), variant).values
                  for a in FIG_ALPHAS]
        stack = np.vstack(curves)
        steps = np.diff(stack, axis=0)
        good = np.all(steps > 0) if expect_up else np.all(steps < 0)
        ok &= bool(good)
        parts.append(f"D_rx={d_rx:g}: F_h {'increases' if expect_up else 'decreases'} with "
                     f"alpha over t in [{window[0]:g}, {window[1]:g}]: {bool(good)}")
    grid = np.linspace(0.0, 40.0, 81)
    mono = True
    for a, d_rx, v in itertools.product(FIG_ALPHAS, (0.5, 50.0), (P, N)):
        vals = hitting_curve(grid, PUBLISHED.with_(alpha=a, D_rx=d_rx), v).values
        mono &= bool(np.all(np.diff(vals) >= 0))
    ok &= mono
    parts.append(f"monotone in t: {mono}")
    return CheckResult("hitting-probability orderings", ok,
                       f"[{variant.value} variant, alphas {FIG_ALPHAS}] " + "; ".join(parts))


def check_channel_sanity(n_random=50, seed=11) -> CheckResult:
    parts, ok = [], True
    worst = 0.0
    for eps in (0.0, 0.1, 0.2, 0.5, 0.9):
        probs = TransitionProbs(1 - eps, 1 - eps, eps, eps)
        for beta in np.linspace(0, 1, 41):
            worst = max(worst, abs(mutual_information(probs, beta)
                                   - (1 - eps) * binary_entropy(beta)))
    ok &= worst <= 1e-9
    parts.append(f"symmetric erasure MI error {worst:.1e}")
    b, c = maximize_air(TransitionProbs(0.8, 0.8, 0.2, 0.2))
    ok &= abs(b - 0.5) <= 1e-6 and abs(c - 0.8) <= 1e-6
    parts.append(f"maximize_air(eps=0.2) = ({b:.7f}, {c:.7f})")
    rng = np.random.default_rng(seed)
    grid = np.linspace(0, 1, 101)
    worst_d2, worst_end = -np.inf, 0.0
    for _ in range(n_random):
        probs = random_transition_probs(rng)
        curve = mi_curve(probs, grid)
        worst_end = max(worst_end, abs(curve[0]), abs(curve[-1]))
        worst_d2 = max(worst_d2, float(np.max(np.diff(curve, 2))))
    ok &= worst_end <= 1e-12 and worst_d2 <= 1e-9
    parts.append(f"|I(0)|,|I(1)| <= {worst_end:.1e}; max second difference {worst_d2:.2e} "
                 f"over {n_random} random channels")
    return CheckResult("channel sanity", ok, "; ".join(parts))


def random_transition_probs(rng) -> TransitionProbs:
    r0 = rng.dirichlet(np.ones(3))
    r1 = rng.dirichlet(np.ones(3))
    return TransitionProbs(p0=r0[0], p1=r1[1], eps0=r0[2], eps1=r1[2])


def check_air_orderings(T1=1.0, Tu=40.0, mobilities=(0.5, 5.0)) -> CheckResult:
    air = {}
    for alpha in FIG_ALPHAS:
        for m in mobilities:
            air[alpha, m] = analyze_channel(PUBLISHED.with_(alpha=alpha, D_tx=m, D_rx=0.0),
                                            T1, Tu).air
    alpha_ok = all(air[1.1, m] < air[1.0, m] for m in mobilities)
    mob_ok = all(air[a, mobilities[1]] < air[a, mobilities[0]] for a in FIG_ALPHAS)
    table = ", ".join(f"(a={a:g}, D_tx={m:g}): {v:.4e}" for (a, m), v in air.items())
    return CheckResult(
        "AIR orderings", alpha_ok and mob_ok,
        f"AIR(1.1) < AIR(1.0) at every mobility: {alpha_ok}; AIR falls as D_tx rises "
        f"{mobilities[0]:g} -> {mobilities[1]:g}: {mob_ok}; {table}",
        {"alpha_ok": alpha_ok, "mobility_ok": mob_ok,
         "air": {f"{a:g},{m:g}": v for (a, m), v in air.items()}})


def check_determinism(n=3000, workers=(1, 2)) -> CheckResult:
    from .commands import cmd_simulate
    from .config import load_config
    cfg = load_config(overrides={"channel": {"D_tx": "5 um^2/s", "D_rx": "5 um^2/s"},
                                 "simulation": {"n_particles": n, "dt": "0.05 s",
                                                "horizon": "11 s", "seed": 99}})
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        runs = [(workers[0], "a"), (workers[0], "b")] + [(w, f"w{w}") for w in workers[1:]]
        for w, tag in runs:
            paths = cmd_simulate(cfg, Path(tmp) / tag, workers=w)
            blobs.append(tuple(p.read_bytes() for p in paths))
    same = all(b == blobs[0] for b in blobs)
    return CheckResult("determinism", same,
                       f"{len(blobs)} simulate runs (workers {workers}) byte-identical: {same}")


def run_all(include_mc: bool = True, workers: int = 1) -> list[CheckResult]:
    results = [check_closed_form_vs_oracle(), check_printed_formula_audit(), check_reduction(),
               check_normalization()]
    if include_mc:
        results.append(check_monte_carlo(workers=workers))
        results.append(check_distance_law(workers=workers))
    results += [check_hitting_orderings(), check_channel_sanity(), check_air_orderings()]
    if include_mc:
        results.append(check_determinism())
    return results
