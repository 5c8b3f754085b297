"""``mobile-mc`` command line.

Exit codes: 0 success, 1 oracle or validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .commands import (cmd_air, cmd_distance_pdf, cmd_fhtd, cmd_hitting, cmd_simulate,
                       cmd_validate)
from .config import ConfigError, load_config
from .fhtd import ClosedForm, FhtdVariant
from .kinematics import IncrementScheme
from .numerics import OptimizationError, QuadratureError

log = logging.getLogger("mobile_mc")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment file")
    common.add_argument("--seed", type=int, help="override simulation.seed")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--variant", choices=[v.value for v in FhtdVariant],
                        help="static density convention")
    common.add_argument("--closed-form", choices=["printed", "corrected", "quadrature"],
                        help="mobile density evaluator")
    common.add_argument("--scheme", choices=[s.value for s in IncrementScheme],
                        help="simulator increment scheme")
    common.add_argument("--workers", type=int, help="simulation worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="mobile-mc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    f = sub.add_parser("fhtd", parents=[common], help="first-hitting-time densities")
    f.add_argument("--spbs", action="store_true", help="add a simulated histogram column")
    sub.add_parser("hitting", parents=[common], help="hitting probability over time")
    sub.add_parser("distance-pdf", parents=[common], help="TX-RX distance law at release")
    sub.add_parser("simulate", parents=[common], help="particle simulation")
    sub.add_parser("air", parents=[common], help="mutual information and AIR")
    v = sub.add_parser("validate", parents=[common], help="run the oracle suite")
    v.add_argument("--no-mc", action="store_true", help="skip the Monte Carlo checks")
    return p


def _overrides(args) -> dict:
    sim = {}
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.scheme is not None:
        sim["scheme"] = args.scheme
    if args.workers is not None:
        sim["workers"] = args.workers
    analysis = {}
    if args.variant is not None:
        analysis["variant"] = args.variant
    if args.closed_form is not None:
        analysis["closed_form"] = args.closed_form
    return {k: v for k, v in (("simulation", sim), ("analysis", analysis)) if v}


def run(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    out = args.out
    workers = cfg.sim["workers"]
    variant = FhtdVariant(args.variant) if args.variant else None
    form = ClosedForm(args.closed_form) if args.closed_form else None
    if args.command == "fhtd":
        paths = [cmd_fhtd(cfg, out, variant, spbs=args.spbs or None, workers=workers)]
    elif args.command == "hitting":
        paths = [cmd_hitting(cfg, out, variant, form)]
    elif args.command == "distance-pdf":
        path, masses = cmd_distance_pdf(cfg, out)
        paths = [path]
        log.info("distance density masses: %s", ", ".join(f"{m:.9f}" for m in masses))
    elif args.command == "simulate":
        paths = cmd_simulate(cfg, out, workers=workers, variant=variant, form=form)
    elif args.command == "air":
        paths = cmd_air(cfg, out, variant, form)
    else:
        path, ok = cmd_validate(cfg, out, include_mc=not args.no_mc, workers=workers)
        print(path.read_text(), end="")
        return EXIT_OK if ok else EXIT_FAIL
    for path in paths:
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, OptimizationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
