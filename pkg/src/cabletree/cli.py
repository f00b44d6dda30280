"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 infeasible (or heuristic
failure), 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import io as fio
from .bench import run_bench, write_bench_csv
from .fmm import UnreachableError, pairwise_lengths
from .formulation import build_model, count_report, export_lp
from .heuristic import brute_force_optimum, prim_constrained, sweep_starts
from .netmodel import ConstraintSet
from .solver import BUDGET_EXHAUSTED, INFEASIBLE, Budget, solve_exact
from .terrain import EARTH_RADIUS_KM, GridError, load_grid, resample

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("cabletree")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _sizes(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _network_args(p, constraints=True):
    p.add_argument("--network", required=True, type=Path, help="CSV i,j,length_km[,cost]")
    if constraints:
        p.add_argument("--constraints", type=Path, help="CSV a,b,max_length_km,max_hops")
    p.add_argument("--rate-per-km", type=float, default=1.0,
                   help="cost per km for edges without a cost column (default 1: cost in km)")
    p.add_argument("--out", type=Path, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cabletree", description="Latency-constrained tree cable network planner.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("costs", help="FMM cable lengths between every pair of sites")
    p.add_argument("--grid", required=True, type=Path, help="ASCII elevation grid")
    p.add_argument("--sites", required=True, type=Path, help="CSV id,name,lat,lon")
    p.add_argument("--out", type=Path, help="cost CSV i,j,length_km (default stdout)")
    p.add_argument("--paths-out", type=Path, help="GeoJSON of the traced paths")
    p.add_argument("--resolution", type=float, help="resample the grid to this cell size (degrees)")
    p.add_argument("--earth-radius-km", type=float, default=EARTH_RADIUS_KM)
    p.add_argument("--allow-land", action="store_true", help="treat cells above sea level as traversable")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("solve", help="exact constrained minimum spanning tree")
    _network_args(p)
    p.add_argument("--budget-seconds", type=float, default=60.0)
    p.add_argument("--budget-nodes", type=int, default=10_000_000)
    p.add_argument("--geojson", type=Path, help="write chosen edges as GeoJSON")
    p.add_argument("--sites", type=Path, help="sites CSV for straight-chord edge geometry")
    p.add_argument("--paths", type=Path, help="paths GeoJSON from 'costs' for FMM edge geometry")

    p = sub.add_parser("heuristic", help="Prim-based constrained heuristic")
    _network_args(p)
    p.add_argument("--start", help="start node label (default: first node)")
    p.add_argument("--sweep-starts", action="store_true", help="try every start node, keep the best")

    p = sub.add_parser("oracle", help="exhaustive optimum over all spanning trees (n <= 10)")
    _network_args(p)

    p = sub.add_parser("export-lp", help="write the ILP model in LP format")
    _network_args(p)
    p.add_argument("--sizes-out", type=Path, help="JSON of model size metrics")

    p = sub.add_parser("bench", help="solver run-time over random instances")
    p.add_argument("--sizes", type=_sizes, default=_sizes("4-8"), help="e.g. 4-8 or 4,6,8")
    p.add_argument("--density", type=float, default=1.0, help="fraction of node pairs constrained")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--slack", type=float, default=1.3, help="length limit as a multiple of the direct edge")
    p.add_argument("--max-hops", type=int, help="hop limit on every constrained pair")
    p.add_argument("--budget-seconds", type=float, default=60.0)
    p.add_argument("--out", type=Path, help="CSV output (default stdout)")
    return parser


def _load(args):
    net = fio.read_network(args.network, rate_per_km=args.rate_per_km)
    C = fio.read_constraints(args.constraints, net) if args.constraints else ConstraintSet()
    return net, C


def _emit(obj, path):
    text = fio.write_json(obj, path)
    if path is None:
        sys.stdout.write(text)


def cmd_costs(args) -> int:
    ids, _names, pts = fio.read_sites(args.sites)
    grid = load_grid(args.grid, allow_land=args.allow_land, radius_km=args.earth_radius_km)
    if args.resolution:
        grid = resample(grid, args.resolution)
    log.info("grid %dx%d at %g deg, %d sites", grid.n_rows, grid.n_cols, grid.cell_size, len(pts))
    cm = pairwise_lengths(grid, pts, ids, workers=args.workers)
    fio.write_cost_csv(cm, args.out if args.out else sys.stdout)
    if args.paths_out:
        fio.write_json(fio.paths_geojson(cm), args.paths_out)
    return EXIT_OK


def _status_code(status: str) -> int:
    return {INFEASIBLE: EXIT_INFEASIBLE, BUDGET_EXHAUSTED: EXIT_BUDGET}.get(status, EXIT_OK)


def cmd_solve(args) -> int:
    net, C = _load(args)
    out = solve_exact(net, C, Budget(args.budget_seconds, args.budget_nodes))
    _emit(out.to_dict(net), args.out)
    if args.geojson and out.tree is not None:
        sites = paths = None
        if args.paths:
            paths = fio.read_paths_geojson(args.paths)
        if args.sites:
            ids, _, pts = fio.read_sites(args.sites)
            sites = dict(zip(ids, pts))
        if sites is None and paths is None:
            raise fio.InputError("--geojson needs --sites or --paths")
        fio.write_json(fio.edges_geojson(net, out.tree, sites, paths), args.geojson)
    return _status_code(out.status)


def cmd_heuristic(args) -> int:
    net, C = _load(args)
    if args.sweep_starts:
        out = sweep_starts(net, C)
    else:
        start = net.node(args.start) if args.start else 0
        out = prim_constrained(net, C, start)
    _emit(out.to_dict(net), args.out)
    return EXIT_OK if out.feasible else EXIT_INFEASIBLE


def cmd_oracle(args) -> int:
    net, C = _load(args)
    out = brute_force_optimum(net, C)
    _emit(out.to_dict(net), args.out)
    return _status_code(out.status)


def cmd_export_lp(args) -> int:
    net, C = _load(args)
    text = export_lp(build_model(net, C))
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    if args.sizes_out:
        fio.write_json(count_report(net, C).to_dict(), args.sizes_out)
    return EXIT_OK


def cmd_bench(args) -> int:
    hops = args.max_hops if args.max_hops is not None else math.inf
    rows = run_bench(args.sizes, args.density, args.seed, args.repeats,
                     Budget(args.budget_seconds), args.slack, hops)
    write_bench_csv(rows, args.out if args.out else sys.stdout)
    return EXIT_OK


COMMANDS = {
    "costs": cmd_costs,
    "solve": cmd_solve,
    "heuristic": cmd_heuristic,
    "oracle": cmd_oracle,
    "export-lp": cmd_export_lp,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (GridError, UnreachableError, OSError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"cabletree {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_INPUT


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
