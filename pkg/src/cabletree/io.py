"""CSV, GeoJSON and JSON file formats."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

from .fmm import CostMatrix
from .netmodel import Constraint, ConstraintSet, Network, SpanningTree
from .terrain import GeoPoint


class InputError(ValueError):
    """Raised for malformed input files."""


def _rows(path, required: Sequence[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty file")
        header = [h.strip() for h in reader.fieldnames]
        missing = [h for h in required if h not in header]
        if missing:
            raise InputError(f"{path}: missing column(s) {', '.join(missing)}")
        reader.fieldnames = header
        return [{k: (v.strip() if isinstance(v, str) else v) for k, v in row.items()} for row in reader]


def read_sites(path) -> tuple[list[str], list[str], list[GeoPoint]]:
    """Sites file ``id,name,lat,lon`` -> (ids, names, points)."""
    ids, names, pts = [], [], []
    for n, row in enumerate(_rows(path, ("id", "name", "lat", "lon")), start=2):
        try:
            pts.append(GeoPoint(float(row["lat"]), float(row["lon"])))
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}:{n}: {exc}") from None
        ids.append(row["id"])
        names.append(row["name"])
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate site ids")
    return ids, names, pts


def read_network(path, rate_per_km: float = 1.0) -> Network:
    """Network file ``i,j,length_km[,cost]``; an empty or absent cost is length x rate."""
    rows = []
    for n, row in enumerate(_rows(path, ("i", "j", "length_km")), start=2):
        try:
            length = float(row["length_km"])
            cost = row.get("cost")
            cost = float(cost) if cost not in (None, "") else None
        except ValueError as exc:
            raise InputError(f"{path}:{n}: {exc}") from None
        rows.append((row["i"], row["j"], length, cost))
    if not rows:
        raise InputError(f"{path}: no edges")
    try:
        return Network.from_rows(rows, rate_per_km=rate_per_km)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_network(net: Network, path, with_cost: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "length_km", "cost"] if with_cost else ["i", "j", "length_km"])
        for k, (i, j) in enumerate(net.edges):
            row = [net.labels[i], net.labels[j], repr(net.lengths[k])]
            if with_cost:
                row.append(repr(net.costs[k]))
            w.writerow(row)


def _bound(text: str | None, integer: bool) -> float:
    if text in (None, ""):
        return math.inf
    v = float(text)
    if integer:
        if not v.is_integer():
            raise ValueError(f"max_hops must be an integer, got {text}")
        return int(v)
    return v


def read_constraints(path, net: Network) -> ConstraintSet:
    """Constraints file ``a,b,max_length_km,max_hops``; empty fields are unbounded."""
    entries = []
    for n, row in enumerate(_rows(path, ("a", "b", "max_length_km", "max_hops")), start=2):
        try:
            entries.append(Constraint(
                net.node(row["a"]), net.node(row["b"]),
                _bound(row["max_length_km"], False), _bound(row["max_hops"], True),
            ))
        except (KeyError, ValueError) as exc:
            raise InputError(f"{path}:{n}: {exc}") from None
    try:
        return ConstraintSet(entries)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_constraints(C: ConstraintSet, net: Network, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "max_length_km", "max_hops"])
        for c in C:
            w.writerow([
                net.labels[c.a], net.labels[c.b],
                "" if math.isinf(c.max_length) else repr(float(c.max_length)),
                "" if math.isinf(c.max_hops) else int(c.max_hops),
            ])


def write_cost_csv(cm: CostMatrix, dest) -> None:
    """Cost matrix as ``i,j,length_km``; ``dest`` is a path or an open text file."""
    if hasattr(dest, "write"):
        _cost_rows(cm, dest)
    else:
        with open(dest, "w", newline="") as fh:
            _cost_rows(cm, fh)


def _cost_rows(cm: CostMatrix, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["i", "j", "length_km"])
    for i, j, length in cm.pairs():
        w.writerow([cm.labels[i], cm.labels[j], f"{length:.6f}"])


def paths_geojson(cm: CostMatrix) -> dict:
    feats = []
    for (i, j), poly in sorted(cm.paths.items()):
        feats.append(poly.to_feature(i=cm.labels[i], j=cm.labels[j]))
    return {"type": "FeatureCollection", "features": feats}


def read_paths_geojson(path) -> dict:
    """``{(i, j): [[lon, lat], ...]}`` keyed by both orientations."""
    data = json.loads(Path(path).read_text())
    out = {}
    for f in data.get("features", []):
        props = f.get("properties", {})
        coords = f["geometry"]["coordinates"]
        a, b = str(props["i"]), str(props["j"])
        out[(a, b)] = coords
        out[(b, a)] = coords[::-1]
    return out


def edges_geojson(net: Network, tree: SpanningTree, sites: dict | None = None,
                  paths: dict | None = None) -> dict:
    """Chosen tree edges as LineStrings.

    Uses the traced polylines in ``paths`` when present, otherwise a straight
    chord between the ``sites`` coordinates (``{label: GeoPoint}``).
    """
    feats = []
    for i, j in tree.edges:
        a, b = net.labels[i], net.labels[j]
        k = net.edge_index(i, j)
        if paths and (a, b) in paths:
            coords = paths[(a, b)]
            source = "fmm"
        elif sites and a in sites and b in sites:
            coords = [[sites[a].lon, sites[a].lat], [sites[b].lon, sites[b].lat]]
            source = "great_circle"
        else:
            raise InputError(f"no geometry for edge {a}-{b}")
        feats.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {"i": a, "j": b, "length_km": net.lengths[k], "cost": net.costs[k],
                           "geometry_source": source},
        })
    return {"type": "FeatureCollection", "features": feats}


def write_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
