"""Command-line front end.

Exit codes: 0 everything passed, 1 a check or chord search failed,
2 the config could not be parsed or the table could not be built.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

from .config import load_config
from .dynamics import orbit, phase_portrait
from .errors import AssumptionError, ChordSearchError, ConfigError, ConvexityError, ResolutionError
from .report import orbit_csv, portrait_csv, portrait_svg, reports_to_json
from .table import PhasePoint, assumption_margin
from .verify import CHECKS, run_checks

log = logging.getLogger("magbill")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _out_dir(args, cfg) -> Path:
    out = Path(args.out if args.out is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_table_info(args, cfg) -> int:
    table = cfg.make_table()
    lines = [
        f"surface            {cfg.surface} (K = {table.K})",
        f"perimeter          {table.perimeter:.17g}",
        f"area               {table.area:.17g}",
        f"k_min              {table.k_min:.17g}",
        f"k_max              {table.k_max:.17g}",
        f"gauss_bonnet       {table.gauss_bonnet_residual:.3e}",
        f"beta               {cfg.beta:.17g}",
        f"assumption_margin  {assumption_margin(table, cfg.beta):.17g}",
    ]
    print("\n".join(lines))
    return EXIT_OK


def cmd_orbit(args, cfg) -> int:
    system = cfg.make_system()
    out = _out_dir(args, cfg) / "orbit.csv"
    try:
        p0 = PhasePoint(args.x0 % system.perimeter, args.phi0).check(system.perimeter)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    status, error = EXIT_OK, None
    try:
        points = orbit(system, p0, args.n)
    except ChordSearchError as exc:
        points = exc.partial
        error = (exc.index + 1, str(exc))
        status = EXIT_FAIL
    rows = [(i + 1, p.x, p.phi, l) for i, (p, l) in enumerate(points)]
    out.write_text(orbit_csv(rows, error))
    print(out)
    if error:
        log.error(error[1])
    return status


def _seed_grid(nx: int, nphi: int, perimeter: float) -> list[PhasePoint]:
    return [
        PhasePoint(perimeter * i / nx, math.pi * (j + 0.5) / nphi)
        for i in range(nx)
        for j in range(nphi)
    ]


def cmd_phase_portrait(args, cfg) -> int:
    system = cfg.make_system()
    seeds = _seed_grid(args.seed_grid[0], args.seed_grid[1], system.perimeter)
    portrait = phase_portrait(system, seeds, args.iterations)
    out = _out_dir(args, cfg)
    (out / "portrait.csv").write_text(portrait_csv(portrait.samples))
    (out / "portrait.svg").write_text(portrait_svg(portrait.samples, system.perimeter))
    print(out / "portrait.csv")
    print(out / "portrait.svg")
    for sid, msg in sorted(portrait.errors.items()):
        log.error("seed %d: %s", sid, msg)
    return EXIT_FAIL if portrait.errors else EXIT_OK


def cmd_verify(args, cfg) -> int:
    system = cfg.make_system()
    which = args.check or list(CHECKS)
    reports = run_checks(cfg, system, which)
    for r in reports:
        print(r.line())
    out = _out_dir(args, cfg) / "report.json"
    out.write_text(reports_to_json(reports, asdict(cfg)))
    print(out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magbill", description="Magnetic billiards on constant-curvature surfaces")
    ap.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="Run configuration (JSON)")
        p.add_argument("--out", default=None, help="Output directory (overrides config 'output')")

    p = sub.add_parser("table-info", help="Perimeter, area, curvature range and assumption margin")
    common(p)
    p.set_defaults(func=cmd_table_info)

    p = sub.add_parser("orbit", help="Write an orbit as CSV")
    common(p)
    p.add_argument("--x0", type=float, default=0.0, help="Initial arclength")
    p.add_argument("--phi0", type=float, default=math.pi / 2, help="Initial inward angle (radians)")
    p.add_argument("-n", type=int, default=100, help="Number of collisions")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("phase-portrait", help="Write a phase portrait as CSV and SVG")
    common(p)
    p.add_argument("--seed-grid", type=int, nargs=2, default=(1, 12), metavar=("NX", "NPHI"),
                   help="Seeds on an NX x NPHI grid of the phase cylinder")
    p.add_argument("--iterations", type=int, default=200)
    p.set_defaults(func=cmd_phase_portrait)

    p = sub.add_parser("verify", help="Run verification checks")
    common(p)
    p.add_argument("--check", action="append", choices=CHECKS,
                   help="Check to run (repeatable); default: all")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "n", 0) < 0:
        log.error("n must be >= 0")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (ConfigError, ConvexityError, ResolutionError, AssumptionError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
