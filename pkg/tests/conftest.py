import itertools
import math
import random
from pathlib import Path

import numpy as np
import pytest

from cabletree.io import read_constraints, read_network
from cabletree.netmodel import Network
from cabletree.terrain import GeoPoint, TerrainGrid

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def med_net():
    return read_network(DATA / "mediterranean_network.csv")


@pytest.fixture(scope="session")
def med_constraints(med_net):
    return {
        name: read_constraints(DATA / f"{name}.csv", med_net)
        for name in ("bd_1100_3", "bd_800_2", "bd_700")
    }


def random_connected_network(rng: random.Random, n: int, extra_p: float = 0.5,
                             wmax: int = 50) -> Network:
    """Random spanning tree plus extra edges; integer weights keep sums exact."""
    order = list(range(n))
    rng.shuffle(order)
    edges = set()
    for k in range(1, n):
        a, b = order[k], order[rng.randrange(k)]
        edges.add((min(a, b), max(a, b)))
    for i, j in itertools.combinations(range(n), 2):
        if (i, j) not in edges and rng.random() < extra_p:
            edges.add((i, j))
    edges = sorted(edges)
    lengths = [float(rng.randint(1, wmax)) for _ in edges]
    costs = [float(rng.randint(1, wmax)) for _ in edges]
    return Network(tuple(str(i) for i in range(n)), tuple(edges), tuple(lengths), tuple(costs))


def flat_grid(n_rows, n_cols, cell=0.01, lat0=40.0, lon0=3.0, depth=-500.0, mask=None):
    m = np.ones((n_rows, n_cols), bool) if mask is None else mask
    return TerrainGrid(GeoPoint(lat0, lon0), cell, np.full((n_rows, n_cols), depth), m)


def detour_grid(k: int = 75, lat0: float = 38.0):
    """Square (4k+1) grid with a wall along column 2k over the southern 3k rows.

    Source (2k, k) sits west of the wall; target (2k, 3k) lies east of it. The
    shortest route runs diagonally to the wall tip and diagonally back down.
    """
    n = 4 * k + 1
    mask = np.ones((n, n), bool)
    mask[0:3 * k, 2 * k] = False
    return flat_grid(n, n, lat0=lat0, mask=mask), (2 * k, k), (2 * k, 3 * k)


@pytest.fixture(scope="session")
def detour_case():
    """(grid, source cell, target cell, oracle distance array) for the wall scenario."""
    from oracles import grid_dijkstra_8

    grid, src, tgt = detour_grid()
    dist, _prev = grid_dijkstra_8(grid, src)
    return grid, src, tgt, dist


def random_constraints(rng: random.Random, net: Network, k: int):
    """``k`` distinct pairs; length limits straddle the graph-wide shortest path."""
    from cabletree.netmodel import Constraint, ConstraintSet
    from oracles import dijkstra

    wedges = [(net.lengths[e], i, j) for e, (i, j) in enumerate(net.edges)]
    pairs = rng.sample(list(itertools.combinations(range(net.n), 2)), k)
    out = []
    for a, b in pairs:
        sp = dijkstra(net.n, wedges, a)[b]
        max_len = float(rng.randint(max(1, int(sp * 0.9)), int(sp * 2.5) + 1)) if rng.random() < 0.8 else math.inf
        max_hops = rng.randint(1, net.n - 1) if rng.random() < 0.6 or math.isinf(max_len) else math.inf
        out.append(Constraint(a, b, max_len, max_hops))
    return ConstraintSet(out)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        ok, title, detail = RESULTS[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  {detail}")
