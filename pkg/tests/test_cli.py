import csv
import io
import json
import subprocess
import sys

import pytest

from cabletree.bench import read_bench_csv
from cabletree.cli import main
from cabletree.io import read_network, read_paths_geojson

from conftest import DATA

NET = str(DATA / "mediterranean_network.csv")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_flat_grid(path, n_rows=40, n_cols=60, cell=0.01):
    head = f"ncols {n_cols}\nnrows {n_rows}\nxllcorner 3.0\nyllcorner 40.0\ncellsize {cell}\nNODATA_value -9999\n"
    path.write_text(head + "\n".join(" ".join(["-800"] * n_cols) for _ in range(n_rows)) + "\n")


class TestCosts:
    def test_two_sites_flat(self, tmp_path, capsys):
        from cabletree.terrain import GeoPoint, great_circle_km, load_grid

        grid = tmp_path / "flat.asc"
        write_flat_grid(grid)
        sites = tmp_path / "sites.csv"
        sites.write_text("id,name,lat,lon\np,West,40.2,3.05\nq,East,40.3,3.5\n")
        code, out, _ = run(capsys, "costs", "--grid", str(grid), "--sites", str(sites))
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 1 and (rows[0]["i"], rows[0]["j"]) == ("p", "q")
        g = load_grid(grid)
        a, b = (g.cell_center(g.snap(GeoPoint(*ll))) for ll in ((40.2, 3.05), (40.3, 3.5)))
        gc = great_circle_km(a, b)
        assert float(rows[0]["length_km"]) == pytest.approx(gc, rel=0.02)

    def test_files_round_trip(self, tmp_path, capsys):
        out, paths = tmp_path / "costs.csv", tmp_path / "paths.geojson"
        code, _, _ = run(capsys, "costs", "--grid", str(DATA / "basin.asc"),
                         "--sites", str(DATA / "basin_sites.csv"),
                         "--out", str(out), "--paths-out", str(paths))
        assert code == 0
        net = read_network(out)
        assert net.labels == ("W", "E", "N") and net.m == 3
        geo = read_paths_geojson(paths)
        assert set(geo) == {("W", "E"), ("E", "W"), ("W", "N"), ("N", "W"), ("E", "N"), ("N", "E")}

    def test_resolution_and_radius(self, tmp_path, capsys):
        base = tmp_path / "base.csv"
        coarse = tmp_path / "coarse.csv"
        args = ["costs", "--grid", str(DATA / "basin.asc"), "--sites", str(DATA / "basin_sites.csv")]
        assert run(capsys, *args, "--out", str(base))[0] == 0
        assert run(capsys, *args, "--out", str(coarse), "--resolution", "0.1",
                   "--earth-radius-km", "6378.137")[0] == 0
        assert read_network(coarse).lengths != read_network(base).lengths

    def test_site_on_land(self, capsys):
        code, _, err = run(capsys, "costs", "--grid", str(DATA / "basin.asc"),
                           "--sites", str(DATA / "basin_land_site.csv"))
        assert code == 1
        assert "site I" in err

    def test_allow_land(self, capsys):
        code, out, _ = run(capsys, "costs", "--grid", str(DATA / "basin.asc"),
                           "--sites", str(DATA / "basin_land_site.csv"), "--allow-land")
        assert code == 0
        assert out.count("\n") == 2


class TestSolve:
    def test_unconstrained(self, capsys):
        code, out, _ = run(capsys, "solve", "--network", NET)
        assert code == 0
        d = json.loads(out)
        assert d["total_cost"] == pytest.approx(1416.31)

    def test_constrained_with_geojson(self, tmp_path, capsys):
        geo = tmp_path / "tree.geojson"
        code, out, _ = run(capsys, "solve", "--network", NET, "--constraints", str(DATA / "bd_1100_3.csv"),
                           "--geojson", str(geo), "--sites", str(DATA / "mediterranean_sites.csv"))
        assert code == 0
        d = json.loads(out)
        assert sorted("".join(e) for e in d["edges"]) == ["AB", "AF", "CF", "DE", "DF"]
        feats = json.loads(geo.read_text())["features"]
        assert len(feats) == 5
        assert {f["properties"]["geometry_source"] for f in feats} == {"great_circle"}

    def test_infeasible_exit_code(self, capsys):
        code, out, _ = run(capsys, "solve", "--network", NET, "--constraints", str(DATA / "bd_700.csv"))
        assert code == 2
        assert json.loads(out)["status"] == "infeasible"

    def test_budget_exit_code(self, tmp_path, capsys):
        code, out, _ = run(capsys, "solve", "--network", NET, "--constraints", str(DATA / "bd_800_2.csv"),
                           "--budget-nodes", "1")
        assert code == 3
        assert json.loads(out)["status"] == "budget_exhausted"

    def test_geojson_needs_geometry(self, tmp_path, capsys):
        code, _, err = run(capsys, "solve", "--network", NET, "--geojson", str(tmp_path / "x.geojson"))
        assert code == 1 and "--sites or --paths" in err

    def test_out_file_and_rate(self, tmp_path, capsys):
        out = tmp_path / "o.json"
        code, stdout, _ = run(capsys, "solve", "--network", NET, "--rate-per-km", "24000", "--out", str(out))
        assert code == 0 and stdout == ""
        assert json.loads(out.read_text())["total_cost"] == pytest.approx(1416.31 * 24000)

    def test_matches_oracle(self, capsys):
        for cons in ("bd_1100_3.csv", "bd_800_2.csv", "bd_700.csv"):
            c1, s, _ = run(capsys, "solve", "--network", NET, "--constraints", str(DATA / cons))
            c2, o, _ = run(capsys, "oracle", "--network", NET, "--constraints", str(DATA / cons))
            assert c1 == c2
            assert json.loads(s)["total_cost"] == json.loads(o)["total_cost"]


class TestHeuristic:
    def test_default_start(self, capsys):
        code, out, _ = run(capsys, "heuristic", "--network", NET, "--constraints", str(DATA / "bd_1100_3.csv"))
        assert code == 0
        d = json.loads(out)
        assert d["start"] == "A"
        assert d["total_cost"] == pytest.approx(1583.67)

    def test_sweep(self, capsys):
        code, out, _ = run(capsys, "heuristic", "--network", NET, "--constraints",
                           str(DATA / "bd_1100_3.csv"), "--sweep-starts")
        assert code == 0 and json.loads(out)["total_cost"] == pytest.approx(1507.99)

    def test_failure_exit_code(self, capsys):
        code, out, _ = run(capsys, "heuristic", "--network", NET, "--constraints", str(DATA / "bd_700.csv"),
                           "--start", "D")
        assert code == 2
        assert json.loads(out)["status"] == "failed"

    def test_unknown_start(self, capsys):
        assert run(capsys, "heuristic", "--network", NET, "--start", "Z")[0] == 1


class TestExportLp:
    def test_lp_and_sizes(self, tmp_path, capsys):
        lp, sizes = tmp_path / "m.lp", tmp_path / "s.json"
        code, _, _ = run(capsys, "export-lp", "--network", NET, "--constraints", str(DATA / "bd_1100_3.csv"),
                         "--out", str(lp), "--sizes-out", str(sizes))
        assert code == 0
        assert lp.read_text().startswith("\\ ")
        s = json.loads(sizes.read_text())
        assert s["formula"] == {"variables": 105, "constraints": 40}
        assert s["generated"]["rows"] == 213

    def test_stdout_deterministic(self, capsys):
        a = run(capsys, "export-lp", "--network", NET)[1]
        b = run(capsys, "export-lp", "--network", NET)[1]
        assert a == b and "End" in a


class TestBench:
    def test_small_unconstrained(self, tmp_path, capsys):
        out = tmp_path / "b.csv"
        code, _, _ = run(capsys, "bench", "--sizes", "4", "--density", "0", "--repeats", "2", "--out", str(out))
        assert code == 0
        (row,) = read_bench_csv(out)
        assert row.n == 4 and row.n_constraints == 0 and row.optimal == 2
        assert row.max_seconds < 1.0

    def test_same_seed_same_instances(self, capsys):
        a = run(capsys, "bench", "--sizes", "4-5", "--seed", "3", "--repeats", "2")[1]
        b = run(capsys, "bench", "--sizes", "4-5", "--seed", "3", "--repeats", "2")[1]
        strip = lambda t: [(r["n"], r["n_constraints"], r["mean_nodes"], r["max_nodes"])
                           for r in csv.DictReader(io.StringIO(t))]
        assert strip(a) == strip(b)

    def test_size_list(self, capsys):
        code, out, _ = run(capsys, "bench", "--sizes", "4,6", "--repeats", "1", "--max-hops", "3")
        assert code == 0
        assert [r["n"] for r in csv.DictReader(io.StringIO(out))] == ["4", "6"]


class TestErrors:
    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "solve", "--network", "/nonexistent.csv")
        assert code == 1 and "error" in err

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["solve"])
        assert exc.value.code == 1

    def test_unknown_label_in_constraints(self, tmp_path, capsys):
        bad = tmp_path / "c.csv"
        bad.write_text("a,b,max_length_km,max_hops\nB,Q,10,\n")
        assert run(capsys, "solve", "--network", NET, "--constraints", str(bad))[0] == 1

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "cabletree", "oracle", "--network", NET],
                             capture_output=True, text=True)
        assert res.returncode == 0
        assert json.loads(res.stdout)["total_cost"] == pytest.approx(1416.31)
