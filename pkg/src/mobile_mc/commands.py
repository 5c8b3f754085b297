"""File-producing commands behind the CLI.

Every command writes through a temporary file that is renamed into place, so a
failure never leaves a partial output behind. Floats are written with ``repr``
so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_channel, distance_pdf_table, fhtd_table
from .channel import mi_curve
from .config import ExperimentConfig
from .fhtd import ClosedForm, FhtdVariant, hitting_curve
from .spbs import SimConfig, empirical_cdf, histogram_density, simulate_fhtd

log = logging.getLogger(__name__)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path: Path, header: list[str], rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return _atomic_write(Path(path), buf.getvalue())


def _tag(**kw) -> str:
    return ";".join(f"{k}={v:g}" for k, v in kw.items())


def cmd_fhtd(cfg: ExperimentConfig, out: Path, variant: FhtdVariant | None = None,
             spbs: bool | None = None, workers: int = 1) -> Path:
    """FHTD on a time grid: printed closed form, corrected form, quadrature, SPBS."""
    variant = variant or cfg.variant
    spbs = cfg.fhtd["spbs"] if spbs is None else spbs
    times = np.linspace(cfg.fhtd["t_min"], cfg.fhtd["t_max"], cfg.fhtd["n_points"])
    header = ["t_s", "alpha", "D_tx_um2_per_s", "D_rx_um2_per_s", "fhtd_printed_eq4_per_s",
              "fhtd_corrected_per_s", "fhtd_quadrature_per_s"]
    if spbs:
        header.append("fhtd_spbs_per_s")
    header.append("variant")
    rows = []
    for alpha in cfg.fhtd["alphas"]:
        for d_tx, d_rx in cfg.fhtd["mobility"]:
            params = cfg.params.with_(alpha=alpha, D_tx=d_tx, D_rx=d_rx)
            log.info("fhtd alpha=%g D_tx=%g D_rx=%g", alpha, d_tx, d_rx)
            table = fhtd_table(times, params, variant, cfg.quad)
            cols = [table["printed"], table["corrected"], table["quadrature"]]
            if spbs:
                h = times[1] - times[0]
                edges = np.concatenate([[max(times[0] - h / 2, 0.0)], times + h / 2])
                outcome = simulate_fhtd(_sim_config(cfg, params), workers)
                cols.append(histogram_density(outcome, edges)[1])
            for i, t in enumerate(times):
                rows.append([t, alpha, d_tx, d_rx, *(c[i] for c in cols), variant.value])
    return write_csv(out / "fhtd.csv", header, rows)


def cmd_hitting(cfg: ExperimentConfig, out: Path, variant: FhtdVariant | None = None,
                form: ClosedForm | None = None) -> Path:
    """Hitting probability over time for every (alpha, D_rx) combination."""
    variant = variant or cfg.hitting["variant"]
    form = form or cfg.closed_form
    if form is ClosedForm.PRINTED:
        raise ValueError("the printed closed form has no finite hitting probability; "
                         "use corrected or quadrature")
    times = np.linspace(0.0, cfg.hitting["t_max"], cfg.hitting["n_points"])
    header, cols = ["t_s"], []
    for alpha in cfg.hitting["alphas"]:
        for d_rx in cfg.hitting["D_rx"]:
            params = cfg.params.with_(alpha=alpha, D_tx=cfg.hitting["D_tx"], D_rx=d_rx)
            curve = hitting_curve(times, params, variant, cfg.quad, form)
            header.append(f"F_h({_tag(alpha=alpha, D_rx_um2_per_s=d_rx)})")
            cols.append(curve.values)
    header.append("warning")
    rows = []
    for i, t in enumerate(times):
        vals = [c[i] for c in cols]
        over = [header[1 + j] for j, v in enumerate(vals) if v > 1.0]
        rows.append([t, *vals, ("exceeds_one:" + "|".join(over)) if over else ""])
    return write_csv(out / "hitting.csv", header, rows)


def cmd_distance_pdf(cfg: ExperimentConfig, out: Path) -> tuple[Path, list[float]]:
    """TX-RX distance density at the release instant for each mobility set."""
    sets = cfg.distance_pdf["mobility"]
    plist = [cfg.params.with_(D_tx=a, D_rx=b) for a, b in sets]
    if any(p.sigma_k == 0 for p in plist):
        raise ValueError("distance_pdf.mobility: static devices have no distance density")
    r_max = cfg.params.r0 + 12.0 * max(p.sigma_k for p in plist)
    r = np.linspace(0.0, r_max, cfg.distance_pdf["n_points"])
    header, cols, masses = ["r_um"], [], []
    for (a, b), p in zip(sets, plist):
        pdf, mass = distance_pdf_table(r, p)
        header.append(f"pdf({_tag(D_tx_um2_per_s=a, D_rx_um2_per_s=b)})_per_um")
        cols.append(pdf)
        masses.append(mass)
    rows = [[r[i], *(c[i] for c in cols)] for i in range(len(r))]
    return write_csv(out / "distance_pdf.csv", header, rows), masses


def _sim_config(cfg: ExperimentConfig, params=None, seed=None, scheme=None) -> SimConfig:
    s = cfg.sim
    return SimConfig(params=params or cfg.params, dt=s["dt"], n_particles=s["n_particles"],
                     horizon=s["horizon"], seed=s["seed"] if seed is None else seed,
                     scheme=scheme or s["scheme"], release_delay=s["release_delay"],
                     collisions_after_release=s["collisions_after_release"],
                     bridge=s["bridge"])


def _sim_summary(cfg: ExperimentConfig, sim: SimConfig, outcome) -> dict:
    raw = json.loads(json.dumps(cfg.raw))
    raw["simulation"].pop("workers", None)
    raw["simulation"]["seed"] = sim.seed
    raw["simulation"]["scheme"] = sim.scheme.value
    return {
        "tool": "mobile_mc", "version": __version__,
        "seed": sim.seed, "scheme": sim.scheme.value,
        "n_particles": outcome.n_particles, "n_hits": int(outcome.hit_times.size),
        "n_censored": outcome.n_censored, "censored_fraction": outcome.censored_fraction,
        "n_collision_reverts": outcome.n_collision_reverts,
        "release_time_s": sim.t_release, "horizon_s": sim.horizon,
        "observed_window_s": sim.horizon - sim.t_release,
        "config": raw,
    }


def cmd_simulate(cfg: ExperimentConfig, out: Path, seed: int | None = None,
                 scheme=None, workers: int = 1, variant: FhtdVariant | None = None,
                 form: ClosedForm | None = None) -> list[Path]:
    """Run the particle simulation; write histogram, CDF and a summary."""
    variant = variant or cfg.variant
    form = form or cfg.closed_form
    sim = _sim_config(cfg, seed=seed, scheme=scheme)
    outcome = simulate_fhtd(sim, workers)
    window = sim.horizon - sim.t_release
    nbins = max(int(round(window / cfg.sim["hist_bin"])), 1)
    edges = np.linspace(0.0, window, nbins + 1)
    counts, dens = histogram_density(outcome, edges)
    paths = [write_csv(out / "simulate_hist.csv",
                       ["bin_left_s", "bin_right_s", "count", "density_per_s"],
                       zip(edges[:-1], edges[1:], counts, dens))]
    emp = empirical_cdf(outcome, edges)
    header = ["t_s", "empirical_cdf"]
    cols = [emp]
    if cfg.params.D_mr > 0 and form is not ClosedForm.PRINTED:
        curve = hitting_curve(edges, cfg.params, variant, cfg.quad, form)
        header.append(f"analytic_cdf_{variant.value}")
        cols.append(curve.values)
    paths.append(write_csv(out / "simulate_cdf.csv", header,
                           ([t, *(c[i] for c in cols)] for i, t in enumerate(edges))))
    summary = _sim_summary(cfg, sim, outcome)
    paths.append(_atomic_write(out / "simulate_summary.json",
                               json.dumps(summary, sort_keys=True, indent=2) + "\n"))
    return paths


def cmd_air(cfg: ExperimentConfig, out: Path, variant: FhtdVariant | None = None,
            form: ClosedForm | None = None) -> list[Path]:
    """Mutual information over beta and the maximising beta for each combination."""
    variant = variant or cfg.variant
    form = form or cfg.closed_form
    if form is ClosedForm.PRINTED:
        raise ValueError("the printed closed form has no finite hitting probability; "
                         "use corrected or quadrature")
    n = int(round(1.0 / cfg.air["beta_step"]))
    betas = np.round(np.linspace(0.0, 1.0, n + 1), 12)
    header, cols, summary = ["beta"], [], []
    for alpha in cfg.air["alphas"]:
        for d_tx in cfg.air["D_tx"]:
            params = cfg.params.with_(alpha=alpha, D_tx=d_tx, D_rx=cfg.air["D_rx"])
            res = analyze_channel(params, cfg.T1, cfg.Tu, variant, form, cfg.quad,
                                  eta_conditional=cfg.eta == "conditional",
                                  eta=cfg.eta if isinstance(cfg.eta, float) else None)
            scheme, probs, total, beta, air = (res.scheme, res.probs, res.F_total,
                                               res.beta_star, res.air)
            tag = _tag(alpha=alpha, D_tx_um2_per_s=d_tx, D_rx_um2_per_s=cfg.air["D_rx"])
            header.append(f"I({tag})_bits")
            cols.append(mi_curve(probs, betas))
            summary.append([alpha, d_tx, cfg.air["D_rx"], scheme.eta, scheme.T1, scheme.Tu,
                            probs.p0, probs.p1, probs.eps0, probs.eps1, total, beta, air])
    p1 = write_csv(out / "air.csv", header,
                   ([b, *(c[i] for c in cols)] for i, b in enumerate(betas)))
    p2 = write_csv(out / "air_summary.csv",
                   ["alpha", "D_tx_um2_per_s", "D_rx_um2_per_s", "eta_s", "T1_s", "Tu_s",
                    "p0", "p1", "eps0", "eps1", "F_total", "beta_star", "air_bits"], summary)
    return [p1, p2]


def cmd_validate(cfg: ExperimentConfig, out: Path, include_mc: bool = True,
                 workers: int = 1) -> tuple[Path, bool]:
    """Run the oracle suite and write a pass/fail report."""
    from .validation import run_all
    results = run_all(include_mc=include_mc, workers=workers)
    lines = [f"mobile_mc {__version__} validation report",
             f"config sha256: {cfg.digest()}", ""]
    for r in results:
        lines.append(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    ok = all(r.passed for r in results)
    lines += ["", f"overall: {'PASS' if ok else 'FAIL'}"]
    return _atomic_write(out / "validate_report.txt", "\n".join(lines) + "\n"), ok
