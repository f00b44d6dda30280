"""Run-time benchmark of the exact solver over random instances."""

from __future__ import annotations

import csv
import itertools
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .heuristic import random_instance
from .netmodel import Constraint, ConstraintSet, Network
from .solver import BUDGET_EXHAUSTED, INFEASIBLE, OPTIMAL, Budget, solve_exact

BENCH_FIELDS = (
    "n", "n_constraints", "instances", "mean_nodes", "max_nodes",
    "mean_seconds", "max_seconds", "optimal", "infeasible", "budget_exhausted",
)


@dataclass
class BenchRow:
    n: int
    n_constraints: int
    instances: int
    mean_nodes: float
    max_nodes: int
    mean_seconds: float
    max_seconds: float
    optimal: int
    infeasible: int
    budget_exhausted: int


def bench_constraints(net: Network, density: float, rng: np.random.Generator,
                      slack: float = 1.3, max_hops: float = math.inf) -> ConstraintSet:
    """Constrain a fraction of all pairs.

    The length limit of pair (a, b) is the larger of ``slack`` times the direct
    edge and the route through the graph's 1-center, so the star around that
    center always stays feasible while cheaper trees are cut off.
    """
    W = net.length_matrix()
    center = int(np.argmin(W.max(axis=1)))
    pairs = list(itertools.combinations(range(net.n), 2))
    k = int(round(density * len(pairs)))
    if k < len(pairs):
        pick = sorted(rng.choice(len(pairs), size=k, replace=False))
        pairs = [pairs[p] for p in pick]
    entries = []
    for a, b in pairs:
        via = W[a, center] + W[center, b]
        entries.append(Constraint(a, b, float(max(slack * W[a, b], via)), max_hops))
    return ConstraintSet(entries)


def run_bench(sizes, density: float = 1.0, seed: int = 0, repeats: int = 5,
              budget: Budget | None = None, slack: float = 1.3,
              max_hops: float = math.inf) -> list[BenchRow]:
    """One row per size; instances are a deterministic function of (seed, n, repeat)."""
    budget = budget or Budget()
    rows = []
    for n in sizes:
        nodes, secs = [], []
        status = {OPTIMAL: 0, INFEASIBLE: 0, BUDGET_EXHAUSTED: 0}
        n_cons = 0
        for rep in range(repeats):
            inst_seed = seed * 1_000_003 + 1000 * n + rep
            net = random_instance(n, inst_seed)
            C = bench_constraints(net, density, np.random.default_rng(inst_seed), slack, max_hops)
            n_cons = len(C)
            t0 = time.perf_counter()
            out = solve_exact(net, C, budget)
            secs.append(time.perf_counter() - t0)
            nodes.append(out.stats["nodes_expanded"])
            status[out.status] += 1
        rows.append(BenchRow(
            n=n, n_constraints=n_cons, instances=repeats,
            mean_nodes=float(np.mean(nodes)), max_nodes=int(max(nodes)),
            mean_seconds=float(np.mean(secs)), max_seconds=float(max(secs)),
            optimal=status[OPTIMAL], infeasible=status[INFEASIBLE],
            budget_exhausted=status[BUDGET_EXHAUSTED],
        ))
    return rows


def write_bench_csv(rows, path_or_file) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        for r in rows:
            d = asdict(r)
            d["mean_seconds"] = f"{d['mean_seconds']:.6f}"
            d["max_seconds"] = f"{d['max_seconds']:.6f}"
            w.writerow(d)
    finally:
        if own:
            fh.close()


def read_bench_csv(path) -> list[BenchRow]:
    with open(path, newline="") as fh:
        out = []
        for d in csv.DictReader(fh):
            out.append(BenchRow(
                n=int(d["n"]), n_constraints=int(d["n_constraints"]), instances=int(d["instances"]),
                mean_nodes=float(d["mean_nodes"]), max_nodes=int(d["max_nodes"]),
                mean_seconds=float(d["mean_seconds"]), max_seconds=float(d["max_seconds"]),
                optimal=int(d["optimal"]), infeasible=int(d["infeasible"]),
                budget_exhausted=int(d["budget_exhausted"]),
            ))
        return out
