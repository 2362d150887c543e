"""Command line: ``gapr generate | validate | solve | sweep``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import netmodel
from .assignment import AssignmentError, ScenarioParams, solve_assignment
from .lpsolve import LpError
from .netmodel import GeneratorConfig, InstanceError
from .pathgen import DEFAULT_MAX_PATHS, NoPathError, eligible_path_sets, path_set_record
from .sweep import DEFAULT_ALPHAS, DEFAULT_PHIS, SweepConfig, SweepError, emit_csv, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_SOLVE = 0, 2, 3


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _load(path: str):
    try:
        return netmodel.read_instance_file(path)
    except InstanceError as exc:
        print(f"invalid instance {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def cmd_generate(args) -> int:
    fields = dict(n_vertices=args.nodes, arc_density=args.density, n_od_pairs=args.od,
                  seed=args.seed, safety_distance=args.safety_distance,
                  walking_speed=args.walking_speed, node_cap_fraction=args.node_cap_fraction,
                  demand_fraction=args.demand_fraction,
                  node_time_window=tuple(args.node_time_window), metric=args.metric,
                  detour_range=tuple(args.detour), name=args.name)
    if args.scale50:
        cfg = netmodel.scale50_config(args.seed)
    else:
        cfg = GeneratorConfig(**fields)
    try:
        inst = netmodel.generate_instance(cfg)
    except InstanceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    netmodel.write_instance_file(inst, args.out)
    print(f"wrote {args.out}: {len(inst.vertices)} vertices, {len(inst.arcs)} arcs, "
          f"{len(inst.od_pairs)} OD pairs")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        with open(args.instance, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        print(f"cannot read {args.instance}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        inst = netmodel.load_instance(raw)
    except InstanceError as exc:
        for v in exc.violations or [exc]:
            print(str(v), file=sys.stderr)
        return EXIT_INVALID
    unreachable = [od.id for od in inst.od_pairs
                   if od.destination not in netmodel.reachable_from(inst, od.origin)]
    if unreachable:
        print("unreachable OD pairs: " + ", ".join(unreachable), file=sys.stderr)
        return EXIT_INVALID
    print(f"ok: {inst.name} ({len(inst.vertices)} vertices, {len(inst.arcs)} arcs, "
          f"{len(inst.od_pairs)} OD pairs)")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    try:
        params = ScenarioParams(args.phi, args.alpha, args.paths_cap)
        path_sets = eligible_path_sets(inst, params.phi, params.max_paths)
        if args.dump_paths:
            with open(args.dump_paths, "w") as fh:
                for ps in path_sets:
                    fh.write(json.dumps(path_set_record(ps)) + "\n")
        a = solve_assignment(inst, params, path_sets)
    except ValueError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_INVALID if not isinstance(exc, NoPathError) else EXIT_SOLVE
    except (AssignmentError, LpError) as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    text = a.to_json()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    inst = _load(args.instance)
    try:
        cfg = SweepConfig(tuple(args.phi_list), tuple(args.alpha_list), args.paths_cap, args.jobs)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    try:
        report = run_sweep(inst, cfg)
    except (SweepError, NoPathError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SOLVE
    if args.csv in (None, "-"):
        emit_csv(report, sys.stdout, include_timings=not args.no_timings)
    else:
        with open(args.csv, "w", newline="") as fh:
            n = emit_csv(report, fh, include_timings=not args.no_timings)
        print(f"wrote {n} rows to {args.csv}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gapr", description="Gathering-avoiding pedestrian routing")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a synthetic instance")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--nodes", type=int, default=50)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--od", type=int, default=25)
    g.add_argument("--out", required=True)
    g.add_argument("--safety-distance", type=float, default=2.0)
    g.add_argument("--walking-speed", type=float, default=1.4)
    g.add_argument("--node-cap-fraction", type=float, default=0.5)
    g.add_argument("--demand-fraction", type=float, default=0.3)
    g.add_argument("--node-time-window", type=float, nargs=2, default=(1.0, 10.0))
    g.add_argument("--metric", choices=("euclidean", "manhattan"), default="euclidean")
    g.add_argument("--detour", type=float, nargs=2, default=(1.0, 1.0),
                   help="range of the per-arc road/straight-line length factor")
    g.add_argument("--scale50", action="store_true",
                   help="use the calibrated 50-node preset (ignores the other shape options)")
    g.add_argument("--name")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check an instance file")
    v.add_argument("--instance", required=True)
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve", help="solve one (phi, alpha) scenario")
    s.add_argument("--instance", required=True)
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--paths-cap", type=int, default=DEFAULT_MAX_PATHS)
    s.add_argument("--out")
    s.add_argument("--dump-paths", help="write eligible path sets as JSON lines")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="run the (phi, alpha) grid")
    w.add_argument("--instance", required=True)
    w.add_argument("--phi-list", type=_floats, default=list(DEFAULT_PHIS))
    w.add_argument("--alpha-list", type=_floats, default=list(DEFAULT_ALPHAS))
    w.add_argument("--csv")
    w.add_argument("--paths-cap", type=int, default=DEFAULT_MAX_PATHS)
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--no-timings", action="store_true",
                   help="leave wall_seconds empty for byte-reproducible output")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
