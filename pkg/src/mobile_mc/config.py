"""Experiment configuration: a TOML file with unit-tagged quantities.

Every dimensional value is a string carrying its unit, e.g. ``"5 um^2/s"``,
``"0.5e-12 m^2/s"``, ``"10 um"`` or ``"40 s"``. Values are converted to the
internal units (um, s, um^2/s) on load. Any key left out falls back to the
defaults below, which mirror the published parameter sets.

Grammar (sections and keys)::

    [channel]     D_m, D_tx, D_rx (diffusivity); alpha; T_s (time); k; r0 (length)
    [timing]      T1, Tu (time); eta = "literal" | "conditional" | "<x> s"
    [analysis]    variant = "normalized" | "printed"
                  closed_form = "corrected" | "printed" | "quadrature"
    [quadrature]  abs_tol, rel_tol, max_subdivisions, horizon_growth
    [simulation]  dt, horizon, hist_bin (time); n_particles; seed; workers;
                  scheme = "exact" | "paper-iid"; release_delay;
                  collisions_after_release; bridge
    [fhtd]        alphas; mobility = [[D_tx, D_rx], ...]; t_min, t_max; n_points; spbs
    [hitting]     alphas; D_rx = [...]; D_tx; t_max; n_points; variant
    [distance_pdf] mobility = [[D_tx, D_rx], ...]; n_points
    [air]         alphas; D_tx = [...]; D_rx; beta_step
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .fhtd import ClosedForm, FhtdVariant, MobileChannelParams
from .kinematics import IncrementScheme
from .numerics import QuadratureSettings


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


_UNITS = {
    "diffusivity": {"um^2/s": 1.0, "um2/s": 1.0, "µm^2/s": 1.0, "µm²/s": 1.0, "um²/s": 1.0,
                    "m^2/s": 1e12, "m2/s": 1e12, "m²/s": 1e12,
                    "mm^2/s": 1e6, "nm^2/s": 1e-6},
    "length": {"um": 1.0, "µm": 1.0, "m": 1e6, "mm": 1e3, "nm": 1e-3},
    "time": {"s": 1.0, "ms": 1e-3, "min": 60.0},
}
_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S+)\s*$")

DEFAULTS = {
    "channel": {"D_m": "5 um^2/s", "D_tx": "0 um^2/s", "D_rx": "0 um^2/s", "alpha": 1.0,
                "T_s": "1 s", "k": 1, "r0": "10 um"},
    "timing": {"T1": "1 s", "Tu": "40 s", "eta": "literal"},
    "analysis": {"variant": "normalized", "closed_form": "corrected"},
    "quadrature": {"abs_tol": 1e-12, "rel_tol": 1e-10, "max_subdivisions": 2000,
                   "horizon_growth": 2.0},
    "simulation": {"dt": "0.5 s", "horizon": "100 s", "hist_bin": "0.5 s",
                   "n_particles": 10000, "seed": 0, "workers": 1, "scheme": "exact",
                   "release_delay": False, "collisions_after_release": False,
                   "bridge": False},
    "fhtd": {"alphas": [0.8, 1.0, 1.1],
             "mobility": [["0 um^2/s", "5 um^2/s"], ["5 um^2/s", "0 um^2/s"],
                          ["5 um^2/s", "5 um^2/s"]],
             "t_min": "0.5 s", "t_max": "50 s", "n_points": 100, "spbs": False},
    "hitting": {"alphas": [0.8, 1.0, 1.1], "D_rx": ["0.5e-12 m^2/s", "50e-12 m^2/s"],
                "D_tx": "0 um^2/s", "t_max": "40 s", "n_points": 81, "variant": "printed"},
    "distance_pdf": {"mobility": [["1 um^2/s", "1 um^2/s"], ["5 um^2/s", "5 um^2/s"]],
                     "n_points": 401},
    "air": {"alphas": [0.8, 1.0, 1.1], "D_tx": ["0.5 um^2/s", "5 um^2/s"],
            "D_rx": "0 um^2/s", "beta_step": 0.01},
}

_KINDS = {
    ("channel", "D_m"): "diffusivity", ("channel", "D_tx"): "diffusivity",
    ("channel", "D_rx"): "diffusivity", ("channel", "T_s"): "time",
    ("channel", "r0"): "length", ("timing", "T1"): "time", ("timing", "Tu"): "time",
    ("simulation", "dt"): "time", ("simulation", "horizon"): "time",
    ("simulation", "hist_bin"): "time",
    ("fhtd", "t_min"): "time", ("fhtd", "t_max"): "time",
    ("hitting", "D_tx"): "diffusivity", ("hitting", "t_max"): "time",
    ("air", "D_rx"): "diffusivity",
}
_LIST_KINDS = {("hitting", "D_rx"): "diffusivity", ("air", "D_tx"): "diffusivity"}
_PAIR_KINDS = {("fhtd", "mobility"): "diffusivity", ("distance_pdf", "mobility"): "diffusivity"}


def parse_quantity(text, kind: str, key: str) -> float:
    if isinstance(text, bool) or not isinstance(text, str):
        raise ConfigError(key, f"expected a string with a {kind} unit, got {text!r}")
    m = _QTY.match(text)
    if not m:
        raise ConfigError(key, f"cannot parse {text!r}; expected '<number> <unit>'")
    unit = m.group(2)
    scale = _UNITS[kind].get(unit)
    if scale is None:
        raise ConfigError(key, f"unit {unit!r} is not a {kind} unit "
                               f"(use one of {', '.join(sorted(_UNITS[kind]))})")
    return float(m.group(1)) * scale


def _merge(raw: dict) -> dict:
    out = copy.deepcopy(DEFAULTS)
    for section, body in raw.items():
        if section not in out:
            raise ConfigError(section, "unknown section")
        if not isinstance(body, dict):
            raise ConfigError(section, "expected a table")
        for key, value in body.items():
            if key not in out[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            out[section][key] = value
    return out


def _number(value, key, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return int(value) if integer else float(value)


def _enum(cls, value, key):
    try:
        return cls(value)
    except ValueError:
        raise ConfigError(key, f"must be one of {[e.value for e in cls]}, got {value!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    params: MobileChannelParams
    T1: float
    Tu: float
    eta: str | float
    variant: FhtdVariant
    closed_form: ClosedForm
    quad: QuadratureSettings
    sim: dict
    fhtd: dict
    hitting: dict
    distance_pdf: dict
    air: dict

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _resolve(merged: dict) -> ExperimentConfig:
    q = {}
    for (section, key), kind in _KINDS.items():
        q[section, key] = parse_quantity(merged[section][key], kind, f"{section}.{key}")
    for (section, key), kind in _LIST_KINDS.items():
        vals = merged[section][key]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{section}.{key}", "expected a non-empty list")
        q[section, key] = [parse_quantity(v, kind, f"{section}.{key}[{i}]")
                           for i, v in enumerate(vals)]
    for (section, key), kind in _PAIR_KINDS.items():
        pairs = merged[section][key]
        if not isinstance(pairs, list) or not pairs:
            raise ConfigError(f"{section}.{key}", "expected a non-empty list of [D_tx, D_rx]")
        out = []
        for i, pair in enumerate(pairs):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError(f"{section}.{key}[{i}]", "expected [D_tx, D_rx]")
            out.append(tuple(parse_quantity(v, kind, f"{section}.{key}[{i}]") for v in pair))
        q[section, key] = out

    ch = merged["channel"]
    try:
        params = MobileChannelParams(
            D_m=q["channel", "D_m"], D_tx=q["channel", "D_tx"], D_rx=q["channel", "D_rx"],
            alpha=_number(ch["alpha"], "channel.alpha"), T_s=q["channel", "T_s"],
            k=_number(ch["k"], "channel.k", integer=True), r0=q["channel", "r0"])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("channel", str(exc))

    eta_raw = merged["timing"]["eta"]
    if eta_raw in ("literal", "conditional"):
        eta = eta_raw
    else:
        eta = parse_quantity(eta_raw, "time", "timing.eta")
    T1, Tu = q["timing", "T1"], q["timing", "Tu"]
    if not 0 < T1 < Tu:
        raise ConfigError("timing.T1", "need 0 < T1 < Tu")

    qs = merged["quadrature"]
    try:
        quad = QuadratureSettings(
            abs_tol=_number(qs["abs_tol"], "quadrature.abs_tol"),
            rel_tol=_number(qs["rel_tol"], "quadrature.rel_tol"),
            max_subdivisions=_number(qs["max_subdivisions"], "quadrature.max_subdivisions",
                                     integer=True),
            horizon_growth=_number(qs["horizon_growth"], "quadrature.horizon_growth"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("quadrature", str(exc))

    s = merged["simulation"]
    sim = {
        "dt": q["simulation", "dt"], "horizon": q["simulation", "horizon"],
        "hist_bin": q["simulation", "hist_bin"],
        "n_particles": _number(s["n_particles"], "simulation.n_particles", integer=True),
        "seed": _number(s["seed"], "simulation.seed", integer=True),
        "workers": _number(s["workers"], "simulation.workers", integer=True),
        "scheme": _enum(IncrementScheme, s["scheme"], "simulation.scheme"),
    }
    for flag in ("release_delay", "collisions_after_release", "bridge"):
        if not isinstance(s[flag], bool):
            raise ConfigError(f"simulation.{flag}", "expected true or false")
        sim[flag] = s[flag]
    if sim["n_particles"] < 1:
        raise ConfigError("simulation.n_particles", "must be at least 1")
    if sim["workers"] < 1:
        raise ConfigError("simulation.workers", "must be at least 1")
    if not 0 <= sim["seed"] < 2 ** 64:
        raise ConfigError("simulation.seed", "must be an unsigned 64-bit integer")
    for key in ("dt", "horizon", "hist_bin"):
        if not sim[key] > 0:
            raise ConfigError(f"simulation.{key}", "must be positive")

    def alphas(section):
        vals = merged[section]["alphas"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{section}.alphas", "expected a non-empty list")
        out = [_number(v, f"{section}.alphas[{i}]") for i, v in enumerate(vals)]
        for i, a in enumerate(out):
            if not 0 < a <= 2:
                raise ConfigError(f"{section}.alphas[{i}]", "alpha must lie in (0, 2]")
        return out

    def count(section, key, minimum=2):
        n = _number(merged[section][key], f"{section}.{key}", integer=True)
        if n < minimum:
            raise ConfigError(f"{section}.{key}", f"must be at least {minimum}")
        return n

    f = merged["fhtd"]
    if not isinstance(f["spbs"], bool):
        raise ConfigError("fhtd.spbs", "expected true or false")
    fhtd = {"alphas": alphas("fhtd"), "mobility": q["fhtd", "mobility"],
            "t_min": q["fhtd", "t_min"], "t_max": q["fhtd", "t_max"],
            "n_points": count("fhtd", "n_points"), "spbs": f["spbs"]}
    if not 0 < fhtd["t_min"] < fhtd["t_max"]:
        raise ConfigError("fhtd.t_min", "need 0 < t_min < t_max")
    hitting = {"alphas": alphas("hitting"), "D_rx": q["hitting", "D_rx"],
               "D_tx": q["hitting", "D_tx"], "t_max": q["hitting", "t_max"],
               "n_points": count("hitting", "n_points"),
               "variant": _enum(FhtdVariant, merged["hitting"]["variant"], "hitting.variant")}
    if not hitting["t_max"] > 0:
        raise ConfigError("hitting.t_max", "must be positive")
    dpdf = {"mobility": q["distance_pdf", "mobility"],
            "n_points": count("distance_pdf", "n_points")}
    step = _number(merged["air"]["beta_step"], "air.beta_step")
    if not 0 < step <= 0.5 or abs(round(1 / step) * step - 1) > 1e-9:
        raise ConfigError("air.beta_step", "must divide 1 into a whole number of steps")
    air = {"alphas": alphas("air"), "D_tx": q["air", "D_tx"], "D_rx": q["air", "D_rx"],
           "beta_step": step}

    return ExperimentConfig(
        raw=merged, params=params, T1=T1, Tu=Tu, eta=eta,
        variant=_enum(FhtdVariant, merged["analysis"]["variant"], "analysis.variant"),
        closed_form=_enum(ClosedForm, merged["analysis"]["closed_form"], "analysis.closed_form"),
        quad=quad, sim=sim, fhtd=fhtd, hitting=hitting, distance_pdf=dpdf, air=air)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read, merge with defaults, apply ``{section: {key: value}}`` overrides, validate."""
    raw = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"not valid TOML: {exc}")
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read: {exc.strerror}")
    merged = _merge(raw)
    for section, body in (overrides or {}).items():
        merged[section].update(body)
    return _resolve(merged)
