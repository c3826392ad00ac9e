"""CLI: crosscheck results against the dense oracle, or plot them."""

from __future__ import annotations

import argparse
import sys

from .crosscheck import CapacityError, oracle_crosscheck
from .plots import plot_isosurfaces, plot_timescales
from .results import SchemaError, load_bundle, load_grid_eval


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="viz-oracle")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    cc = sub.add_parser("crosscheck", help="dense re-computation of a results file")
    cc.add_argument("--traj", required=True)
    cc.add_argument("--traj-y", dest="traj_y")
    cc.add_argument("--basis", required=True)
    cc.add_argument("--results", required=True)

    ts = sub.add_parser("plot-timescales", help="timescale-vs-lag curves")
    ts.add_argument("--results", nargs="+", required=True)
    ts.add_argument("--out", required=True)
    ts.add_argument("--indices", default="2", help="comma-separated t_k indices")
    ts.add_argument("--reference", type=float)

    iso = sub.add_parser("plot-isosurfaces", help="marching-cubes isosurfaces")
    iso.add_argument("--grid", required=True, help="grid-eval CSV")
    iso.add_argument("--out", required=True)
    iso.add_argument("--level", type=float)
    iso.add_argument("--indices", help="comma-separated eigenfunction numbers")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.subcommand == "crosscheck":
            report = oracle_crosscheck(args.traj, args.basis, args.results, args.traj_y)
            print(
                f"{report['kind']}: compared {report['n_compared']} eigenvalues, "
                f"max |diff| = {report['max_abs_diff']:.3e}"
            )
            if not report["passed"]:
                print("MISMATCH against the dense oracle", file=sys.stderr)
                return 1
            print("OK")
            return 0
        if args.subcommand == "plot-timescales":
            bundles = [load_bundle(p) for p in args.results]
            indices = tuple(int(k) for k in args.indices.split(","))
            plot_timescales(bundles, args.out, indices, args.reference)
            print(f"wrote {args.out}")
            return 0
        points, phi = load_grid_eval(args.grid)
        indices = (
            tuple(int(k) for k in args.indices.split(",")) if args.indices else None
        )
        levels = None if args.level is None else [args.level]
        summary = plot_isosurfaces(points, phi, args.out, levels, indices)
        for k, entries in summary.items():
            for level, n_faces, n_comp in entries:
                print(f"phi_{k} level {level:+.4f}: {n_faces} faces, {n_comp} components")
        print(f"wrote {args.out}")
        return 0
    except (SchemaError, CapacityError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
