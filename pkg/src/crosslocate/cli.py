"""Command-line entry point.

Exit statuses: 0 success, 1 I/O or format error, 2 infeasible search or
construction, 64 usage error.  Machine-readable output goes to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dem import Point3, load_dem, save_ascii_grid, save_xyz_csv
from .derivative import DEFAULT_SELECT, arc_derivative, exact_indices, extract_target, save_derivative_csv
from .errors import (
    ConstructionError,
    DegenerateCloudError,
    DegenerateGeometryError,
    GridFormatError,
    GridLookupError,
    InfeasibleError,
    NoCandidatesError,
    SpecError,
)
from .experiment import Roughness, load_spec, run_experiment, synth_terrain
from .measures import MeasureKind
from .pattern import CrossSpec, build_cross, load_pattern, save_pattern
from .search import WINDOWS, SearchConfig, match, resolve_threads

EXIT_OK = 0
EXIT_IO = 1
EXIT_DOMAIN = 2
EXIT_USAGE = 64

log = logging.getLogger("crosslocate")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str, n_min: int, n_max: int, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if not n_min <= len(vals) <= n_max:
        raise argparse.ArgumentTypeError(f"{what} needs {n_min}..{n_max} values, got {len(vals)}")
    return vals


def _xy(text):
    return _floats(text, 2, 2, "x,y")


def _xyz(text):
    return _floats(text, 2, 3, "x,y[,z]")


def _measure(text):
    try:
        return MeasureKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crosslocate", description="Locate sparse height-profile crosses in DEM grids.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("match", help="search a DEM for a pattern")
    m.add_argument("dem", help="ESRI ASCII grid (.asc) or x,y,z CSV")
    m.add_argument("pattern", help="pattern JSON")
    m.add_argument("--guess", type=_xyz, help="window center x,y[,z]; defaults to the pattern center")
    m.add_argument("--measure", type=_measure, default=MeasureKind.WASSERSTEIN, help="w2, ls or procrustes")
    m.add_argument("--lambda", dest="lam", type=float, default=1.0, help="z penalty (default 1)")
    m.add_argument("--radius", type=float, default=450.0, help="center search half-width r in meters")
    m.add_argument("--d1", type=float, default=1.0, help="height tolerance for centers in meters")
    m.add_argument("--angles", type=int, default=360, help="number of rotation angles over [0, 2pi)")
    m.add_argument("--window", choices=WINDOWS, default="full", help="cloud region for normalization statistics")
    m.add_argument("--top-k", type=int, default=10)
    m.add_argument("--skip-angles-for-procrustes", action="store_true")
    m.add_argument("--threads", type=int, default=None, help="worker threads, 0 = all cores")
    m.add_argument("--out", help="also write the JSON report here")

    s = sub.add_parser("synth", help="write a synthetic DEM")
    s.add_argument("out", help="output path (.asc, or .csv for x,y,z rows)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rows", type=int, default=512)
    s.add_argument("--cols", type=int, default=512)
    s.add_argument("--resolution", type=float, default=1.0)
    s.add_argument("--origin", type=_xy, default=[0.0, 0.0])
    s.add_argument("--bumps", type=int, default=Roughness.n_bumps)
    s.add_argument("--amplitude", type=float, default=Roughness.amplitude)
    s.add_argument("--min-width", type=float, default=Roughness.min_width)
    s.add_argument("--max-width", type=float, default=Roughness.max_width)
    s.add_argument("--plane", type=_xy, default=[0.0, 0.0], help="trend coefficients a,b of a*x + b*y")
    s.add_argument("--noise", type=float, default=0.0)

    e = sub.add_parser("experiment", help="run a localization experiment from a JSON/TOML spec")
    e.add_argument("spec")
    e.add_argument("--out", default="experiment_out", help="output directory")
    e.add_argument("--threads", type=int, default=None, help="worker processes, 0 = all cores")
    e.add_argument("--dry-run", action="store_true", help="validate the spec and exit")

    d = sub.add_parser("derive", help="build a cross and its 41-point target")
    d.add_argument("dem")
    d.add_argument("--center", type=_xy, required=True, help="cross center x,y")
    d.add_argument("--alpha", type=float, default=0.0, help="first arm bearing, degrees anti-clockwise from North")
    d.add_argument("--arm-length", type=int, default=100, help="points per arm")
    d.add_argument("--spacing", type=float, default=1.0)
    d.add_argument("--arms", type=int, default=4)
    d.add_argument("--select", type=int, default=DEFAULT_SELECT, help="slope indices kept per arm")
    d.add_argument("--abs-slope", action="store_true", help="rank slopes by absolute value")
    d.add_argument("--out-dir", default=".", help="directory for cross.json, target.json, derivative.csv")

    i = sub.add_parser("info", help="describe a DEM")
    i.add_argument("dem")
    return p


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=1) + "\n")


def cmd_match(args) -> int:
    cloud = load_dem(args.dem)
    T = load_pattern(args.pattern)
    c = T.center
    if args.guess is None:
        guess = c
    else:
        guess = Point3(args.guess[0], args.guess[1], args.guess[2] if len(args.guess) == 3 else c.z)
    try:
        config = SearchConfig(
            r=args.radius,
            d1=args.d1,
            n_angles=args.angles,
            lam=args.lam,
            measure=args.measure,
            normalization_window=args.window,
            top_k=args.top_k,
            threads=resolve_threads(args.threads),
            skip_angles_for_procrustes=args.skip_angles_for_procrustes,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = match(cloud, T, guess, config)
    text = result.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    sys.stdout.write(text + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    rough = Roughness(
        n_bumps=args.bumps,
        amplitude=args.amplitude,
        min_width=args.min_width,
        max_width=args.max_width,
        plane=tuple(args.plane),
        noise=args.noise,
    )
    try:
        cloud = synth_terrain(args.seed, args.rows, args.cols, args.resolution, rough, tuple(args.origin))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out.lower().endswith((".csv", ".xyz")):
        save_xyz_csv(cloud, args.out)
    else:
        save_ascii_grid(cloud, args.out)
    _emit({"path": args.out, "nrows": cloud.nrows, "ncols": cloud.ncols, "resolution": cloud.resolution})
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = load_spec(args.spec)
    if args.dry_run:
        _emit({"valid": True, "spec": spec.to_dict()})
        return EXIT_OK
    result = run_experiment(spec, out_dir=args.out, threads=args.threads)
    failed = sum(1 for r in result.records if r.status != "ok")
    if failed:
        log.warning("%d of %d trials failed", failed, len(result.records))
    sys.stdout.write(str(Path(args.out) / "summary.txt") + "\n")
    return EXIT_OK


def cmd_derive(args) -> int:
    cloud = load_dem(args.dem)
    spec = CrossSpec(
        center=tuple(args.center),
        arm_length_points=args.arm_length,
        spacing=args.spacing,
        first_arm_angle=args.alpha,
        n_arms=args.arms,
    )
    cross = build_cross(cloud, spec)
    deriv = arc_derivative(cross)
    indices = exact_indices(deriv, args.select, args.abs_slope)
    target = extract_target(cross, indices)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"cross": out / "cross.json", "target": out / "target.json", "derivative": out / "derivative.csv"}
    save_pattern(cross, paths["cross"])
    save_pattern(target, paths["target"])
    save_derivative_csv(deriv, paths["derivative"])
    _emit({**{k: str(v) for k, v in paths.items()}, "indices": indices})
    return EXIT_OK


def cmd_info(args) -> int:
    cloud = load_dem(args.dem)
    z = cloud.heights[cloud.valid]
    xmin, ymin, xmax, ymax = cloud.extent()
    _emit(
        {
            "nrows": cloud.nrows,
            "ncols": cloud.ncols,
            "resolution": cloud.resolution,
            "extent": {"xmin": xmin, "ymin": ymin, "xmax": xmax, "ymax": ymax},
            "valid_cells": cloud.n_valid,
            "nodata_cells": cloud.nrows * cloud.ncols - cloud.n_valid,
            "z": {
                "min": float(z.min()) if z.size else None,
                "max": float(z.max()) if z.size else None,
                "mean": float(z.mean()) if z.size else None,
                "std": float(np.std(z)) if z.size else None,
            },
        }
    )
    return EXIT_OK


COMMANDS = {
    "match": cmd_match,
    "synth": cmd_synth,
    "experiment": cmd_experiment,
    "derive": cmd_derive,
    "info": cmd_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"crosslocate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoCandidatesError, InfeasibleError, ConstructionError, GridLookupError, DegenerateGeometryError) as exc:
        print(f"crosslocate: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (OSError, GridFormatError, SpecError, DegenerateCloudError, ValueError) as exc:
        print(f"crosslocate: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
