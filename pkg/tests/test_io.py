import json
import math

import pytest

from cabletree.fmm import pairwise_lengths
from cabletree.io import (
    InputError,
    edges_geojson,
    paths_geojson,
    read_constraints,
    read_network,
    read_paths_geojson,
    read_sites,
    write_constraints,
    write_cost_csv,
    write_json,
    write_network,
)
from cabletree.netmodel import Constraint, ConstraintSet
from cabletree.solver import solve_exact
from cabletree.terrain import load_grid

from conftest import DATA


def test_sites():
    ids, names, pts = read_sites(DATA / "mediterranean_sites.csv")
    assert ids == list("ABCDEF") and names[0] == "Barcelona"
    assert (pts[0].lat, pts[0].lon) == (41.386, 2.190)


def test_network_round_trip(tmp_path, med_net):
    path = tmp_path / "n.csv"
    write_network(med_net.with_costs([2 * c for c in med_net.costs]), path)
    again = read_network(path)
    assert again.lengths == med_net.lengths
    assert again.costs == tuple(2 * c for c in med_net.costs)


def test_constraints_round_trip(tmp_path, med_net):
    C = ConstraintSet([Constraint(1, 3, 1100.0, 3), Constraint(0, 2, max_hops=2), Constraint(4, 5, 99.5)])
    path = tmp_path / "c.csv"
    write_constraints(C, med_net, path)
    assert read_constraints(path, med_net) == C


def test_empty_bounds_unbounded(med_net, med_constraints):
    (c,) = med_constraints["bd_700"]
    assert c.max_length == 700.0 and math.isinf(c.max_hops)


@pytest.mark.parametrize("text", [
    "i,j\nA,B\n",
    "i,j,length_km\nA,B,abc\n",
    "i,j,length_km\n",
    "",
])
def test_bad_network(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(InputError):
        read_network(path)


def test_bad_hops(tmp_path, med_net):
    path = tmp_path / "c.csv"
    path.write_text("a,b,max_length_km,max_hops\nA,B,,2.5\n")
    with pytest.raises(InputError):
        read_constraints(path, med_net)


def test_cost_csv_and_paths(tmp_path):
    grid = load_grid(DATA / "basin.asc")
    ids, _, pts = read_sites(DATA / "basin_sites.csv")
    cm = pairwise_lengths(grid, pts, ids)
    out = tmp_path / "c.csv"
    write_cost_csv(cm, out)
    net = read_network(out)
    for i, j, length in cm.pairs():
        assert net.lengths[net.edge_index(i, j)] == pytest.approx(length, abs=1e-6)
    gpath = tmp_path / "p.geojson"
    write_json(paths_geojson(cm), gpath)
    paths = read_paths_geojson(gpath)
    assert paths[("W", "E")] == paths[("E", "W")][::-1]
    tree = solve_exact(net).tree
    feats = edges_geojson(net, tree, paths=paths)["features"]
    assert {f["properties"]["geometry_source"] for f in feats} == {"fmm"}
    assert all(len(f["geometry"]["coordinates"]) > 2 for f in feats)


def test_edges_need_geometry(med_net):
    tree = solve_exact(med_net).tree
    with pytest.raises(InputError):
        edges_geojson(med_net, tree)


def test_json_rejects_nan():
    with pytest.raises(ValueError):
        write_json({"x": math.nan})
    assert json.loads(write_json({"x": 1})) == {"x": 1}
