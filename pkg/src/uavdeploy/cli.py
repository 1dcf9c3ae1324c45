"""Command-line interface: deploy / sweep / extract.

Exit codes: 0 on success, 1 on configuration errors, 2 when a sweep (or a
single deployment) produced only infeasible outcomes.
"""

from __future__ import annotations

import argparse
import sys

from .extraction import extract_footprints, read_raster
from .geometry import Point2, save_polygon_file
from .scenario import (
    ConfigError,
    SCENARIO_KINDS,
    SweepSpec,
    export_records,
    load_config,
    run_scenario,
    run_sweep,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavdeploy",
        description="Environment-aware drone base-station deployment simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    deploy = sub.add_parser("deploy", help="run one deployment scenario")
    deploy.add_argument("--config", required=True, help="scenario config JSON file")
    deploy.add_argument("--scenario", choices=SCENARIO_KINDS, help="override scenario kind")
    deploy.add_argument("--seed", type=int, help="override the master seed")
    deploy.add_argument("--out", help="output file (default: stdout)")
    deploy.add_argument("--format", choices=("csv", "json"), default="csv")

    sweep = sub.add_parser("sweep", help="sweep one parameter over a value list")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--param", required=True,
                       help="sinr_threshold_db | fleet_size | building_count | user_count")
    sweep.add_argument("--values", required=True, help="comma-separated value list")
    sweep.add_argument("--reps", type=int, default=1, help="replication seeds per value")
    sweep.add_argument("--out", help="output file (default: stdout)")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")

    extract = sub.add_parser("extract", help="extract building footprints from a map image")
    extract.add_argument("--image", required=True, help="PNG or PPM map-view raster")
    extract.add_argument("--scale", type=float, required=True, help="meters per pixel")
    extract.add_argument("--out", required=True, help="output polygon JSON file")
    extract.add_argument("--origin", default="0,0", help="world coordinate of pixel (0,0), as x,y")
    extract.add_argument("--color", help="building color as R,G,B (default: auto-detect)")
    extract.add_argument("--tolerance", type=float, default=10.0, help="per-channel color tolerance")
    return parser


def _emit(records, fmt: str, out: str | None) -> None:
    if out:
        export_records(records, fmt, out)
    else:
        from .scenario import records_to_csv, records_to_json

        sys.stdout.write(records_to_csv(records) if fmt == "csv" else records_to_json(records))


def _cmd_deploy(args) -> int:
    config = load_config(args.config)
    if args.scenario:
        from dataclasses import replace

        config = replace(config, kind=args.scenario)
    record = run_scenario(config, seed=args.seed)
    _emit([record], args.format, args.out)
    return 0 if record.feasible else 2


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    try:
        values = tuple(float(v) for v in args.values.split(","))
    except ValueError as e:
        raise ConfigError(f"bad --values list: {e}") from e
    spec = SweepSpec(param=args.param, values=values, replications=args.reps)
    records = run_sweep(config, spec)
    _emit(records, args.format, args.out)
    return 2 if records and not any(r.feasible for r in records) else 0


def _cmd_extract(args) -> int:
    try:
        ox, oy = (float(v) for v in args.origin.split(","))
    except ValueError as e:
        raise ConfigError(f"bad --origin: {e}") from e
    color = None
    if args.color:
        try:
            color = tuple(int(v) for v in args.color.split(","))
            if len(color) != 3:
                raise ValueError("need exactly three channels")
        except ValueError as e:
            raise ConfigError(f"bad --color: {e}") from e
    try:
        image = read_raster(args.image, scale=args.scale, origin=Point2(ox, oy))
    except OSError as e:
        raise ConfigError(f"cannot read image: {e}") from e
    footprints = extract_footprints(image, target_color=color, tolerance=args.tolerance)
    save_polygon_file(args.out, footprints)
    print(f"extracted {len(footprints)} footprint(s) -> {args.out}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "deploy":
            return _cmd_deploy(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_extract(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
