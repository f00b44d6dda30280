"""Fast Marching geodesics over a terrain grid.

First-order upwind scheme on the 4-neighbor stencil with a binary-heap narrow
band. Axis spacings are the per-edge surface step lengths of the grid, so the
cos(lat) shrinkage of longitude steps and the elevation relief both enter the
local metric.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .terrain import GeoPoint, GridError, TerrainGrid, great_circle_km

FAR, NARROW, ACCEPTED = 0, 1, 2


class UnreachableError(GridError):
    """Raised when a target cannot be reached from a source."""


@dataclass(frozen=True, eq=False)
class ArrivalField:
    grid: TerrainGrid
    source: GeoPoint
    source_cell: tuple[int, int]
    arrival: np.ndarray
    state: np.ndarray
    order: np.ndarray = field(repr=False)  # flat indices in acceptance order

    def at(self, p: GeoPoint) -> float:
        return float(self.arrival[self.grid.locate(p)])


@dataclass(frozen=True)
class GeoPolyline:
    points: tuple[GeoPoint, ...]
    total_length: float

    def to_feature(self, **properties) -> dict:
        coords = [[p.lon, p.lat] for p in self.points]
        if len(coords) == 1:
            coords = coords * 2
        return {
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {"length_km": self.total_length, **properties},
        }


def _solve_quadratic(a: float, ha: float, b: float, hb: float) -> float:
    """Upwind update from an x-neighbor value ``a`` and a y-neighbor value ``b``."""
    one_sided = min(a + ha, b + hb)
    if a == math.inf or b == math.inf:
        return one_sided
    wa, wb = 1.0 / (ha * ha), 1.0 / (hb * hb)
    A = wa + wb
    B = a * wa + b * wb
    C = a * a * wa + b * b * wb - 1.0
    disc = B * B - A * C
    if disc < 0.0:
        return one_sided
    t = (B + math.sqrt(disc)) / A
    if t < max(a, b):
        return one_sided
    return min(t, one_sided)


def _seed_disk(grid: TerrainGrid, src: tuple[int, int], radius: int):
    """Straight-line surface distances for cells within ``radius`` cells of the source.

    The first-order update is least accurate next to a point source, so a
    small obstacle-free disk is initialized directly. The radius shrinks until
    the disk's bounding square lies inside the grid and is fully traversable;
    that square is convex, so the straight segment is a valid path.
    """
    r0, c0 = src
    nr, nc = grid.shape
    radius = min(radius, r0, c0, nr - 1 - r0, nc - 1 - c0)
    while radius > 0 and not grid.mask[r0 - radius:r0 + radius + 1, c0 - radius:c0 + radius + 1].all():
        radius -= 1
    if radius <= 0:
        return []
    p0 = grid.cell_center(src)
    z0 = grid.elevation[src]
    out = []
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            if (dr or dc) and dr * dr + dc * dc <= radius * radius:
                cell = (r0 + dr, c0 + dc)
                h = great_circle_km(p0, grid.cell_center(cell), grid.radius_km)
                dz = (grid.elevation[cell] - z0) / 1000.0
                out.append((cell[0] * nc + cell[1], math.hypot(h, dz)))
    return out


DEFAULT_SEED_RADIUS = 10


def solve_arrival(grid: TerrainGrid, source: GeoPoint, seed_radius: int = DEFAULT_SEED_RADIUS) -> ArrivalField:
    """Geodesic distance (km) from ``source`` to every traversable cell.

    ``seed_radius`` (cells) initializes an obstacle-free disk around the source
    with straight-line distances before marching; 0 gives a pure point source.
    """
    src = grid.snap(source)
    nr, nc = grid.shape
    ew, ns = grid.step_arrays()
    # flat python lists are considerably faster than numpy scalar indexing here
    ew_l = ew.ravel().tolist()  # length nr * (nc - 1)
    ns_l = ns.ravel().tolist()  # length (nr - 1) * nc
    mask_l = grid.mask.ravel().tolist()
    inf = math.inf
    size = nr * nc
    T = [inf] * size
    state = [FAR] * size
    order = []
    s = src[0] * nc + src[1]
    T[s] = 0.0
    state[s] = NARROW
    heap = [(0.0, s)]
    for idx, val in _seed_disk(grid, src, seed_radius):
        T[idx] = val
        state[idx] = NARROW
        heap.append((val, idx))
    heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush
    ncm1 = nc - 1

    while heap:
        t, idx = pop(heap)
        if state[idx] == ACCEPTED or t > T[idx]:
            continue
        state[idx] = ACCEPTED
        order.append(idx)
        r, c = divmod(idx, nc)
        for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            rr, cc = r + dr, c + dc
            if rr < 0 or rr >= nr or cc < 0 or cc >= nc:
                continue
            n = rr * nc + cc
            if state[n] == ACCEPTED or not mask_l[n]:
                continue
            # upwind neighbors of n along each axis
            a, ha = inf, inf
            if cc > 0:
                w = n - 1
                if state[w] == ACCEPTED:
                    a, ha = T[w], ew_l[rr * ncm1 + cc - 1]
            if cc < ncm1:
                e = n + 1
                if state[e] == ACCEPTED:
                    te = T[e]
                    he = ew_l[rr * ncm1 + cc]
                    if te + he < a + ha:
                        a, ha = te, he
            b, hb = inf, inf
            if rr > 0:
                so = n - nc
                if state[so] == ACCEPTED:
                    b, hb = T[so], ns_l[(rr - 1) * nc + cc]
            if rr < nr - 1:
                no = n + nc
                if state[no] == ACCEPTED:
                    tn = T[no]
                    hn = ns_l[rr * nc + cc]
                    if tn + hn < b + hb:
                        b, hb = tn, hn
            new = _solve_quadratic(a, ha, b, hb)
            if new < T[n]:
                T[n] = new
                state[n] = NARROW
                push(heap, (new, n))

    arrival = np.array(T).reshape(nr, nc)
    st = np.array(state, dtype=np.int8).reshape(nr, nc)
    return ArrivalField(grid, source, src, arrival, st, np.array(order, dtype=np.int64))


def _bilinear(T: np.ndarray, row: float, col: float) -> tuple[float, float, float]:
    """Value and index-space gradient (d/drow, d/dcol) of the bilinear interpolant."""
    nr, nc = T.shape
    r0 = min(max(int(math.floor(row)), 0), max(nr - 2, 0))
    c0 = min(max(int(math.floor(col)), 0), max(nc - 2, 0))
    r1, c1 = min(r0 + 1, nr - 1), min(c0 + 1, nc - 1)
    fr, fc = row - r0, col - c0
    t00, t01, t10, t11 = T[r0, c0], T[r0, c1], T[r1, c0], T[r1, c1]
    if not (math.isfinite(t00) and math.isfinite(t01) and math.isfinite(t10) and math.isfinite(t11)):
        return math.inf, 0.0, 0.0
    val = (1 - fr) * ((1 - fc) * t00 + fc * t01) + fr * ((1 - fc) * t10 + fc * t11)
    g_col = (1 - fr) * (t01 - t00) + fr * (t11 - t10)
    g_row = (1 - fc) * (t10 - t00) + fc * (t11 - t01)
    return float(val), float(g_row), float(g_col)


def trace_path(field: ArrivalField, target: GeoPoint) -> GeoPolyline:
    """Backtrace the geodesic from ``target`` to the field's source.

    Steepest descent with half-cell steps on the bilinear interpolant; where
    the interpolant is unusable (next to masked cells) or fails to decrease, a
    discrete step to the lowest 8-neighbor is taken instead. Each accepted
    point has a strictly smaller arrival value than the previous one.
    """
    grid = field.grid
    T = field.arrival
    tgt = grid.locate(target)
    if not math.isfinite(T[tgt]):
        raise UnreachableError(f"target ({target.lat}, {target.lon}) is not reachable from the source")
    sr, sc = field.source_cell
    nr, nc = grid.shape
    # horizontal spacing per row, ignoring relief, for the metric of the step direction
    row_hx = np.array([grid.radius_km * math.radians(grid.cell_size) * math.cos(math.radians(grid.lat(r)))
                       for r in range(nr)])
    row_hy = grid.radius_km * math.radians(grid.cell_size)

    pos = (float(tgt[0]), float(tgt[1]))
    value = float(T[tgt])
    pts = [pos]
    max_steps = 8 * (nr + nc) + 16

    def discrete_step(p, v):
        cr = min(max(int(round(p[0])), 0), nr - 1)
        cc = min(max(int(round(p[1])), 0), nc - 1)
        best, best_v = None, v
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                rr, c2 = cr + dr, cc + dc
                if 0 <= rr < nr and 0 <= c2 < nc and T[rr, c2] < best_v:
                    best, best_v = (float(rr), float(c2)), float(T[rr, c2])
        return best, best_v

    steps = 0
    while max(abs(pos[0] - sr), abs(pos[1] - sc)) > 1.0:
        steps += 1
        nxt = None
        if steps <= max_steps:
            _, g_row, g_col = _bilinear(T, *pos)
            r_here = min(max(int(round(pos[0])), 0), nr - 1)
            d_row = -g_row / row_hy ** 2
            d_col = -g_col / max(row_hx[r_here], 1e-12) ** 2
            norm = math.hypot(d_row, d_col)
            if norm > 0.0 and math.isfinite(norm):
                cand = (min(max(pos[0] + 0.5 * d_row / norm, 0.0), nr - 1.0),
                        min(max(pos[1] + 0.5 * d_col / norm, 0.0), nc - 1.0))
                v_cand, _, _ = _bilinear(T, *cand)
                if v_cand < value:
                    nxt, value = cand, v_cand
        if nxt is None:
            nxt, value = discrete_step(pos, value)
            if nxt is None:
                raise UnreachableError("backtrace stalled; arrival field has no descent direction")
        pos = nxt
        pts.append(pos)
    if pos != (float(sr), float(sc)):
        pts.append((float(sr), float(sc)))
    return _polyline(grid, pts)


def _polyline(grid: TerrainGrid, pts: Sequence[tuple[float, float]]) -> GeoPolyline:
    geo = [grid.point_at(r, c) for r, c in pts]
    elev = [grid.elevation_at(r, c) for r, c in pts]
    segs = []
    for k in range(1, len(geo)):
        h = great_circle_km(geo[k - 1], geo[k], grid.radius_km)
        segs.append(math.hypot(h, (elev[k] - elev[k - 1]) / 1000.0))
    return GeoPolyline(tuple(geo), math.fsum(segs))


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Symmetric pairwise cable lengths (km), with the traced path per pair."""

    labels: tuple[str, ...]
    lengths: np.ndarray
    paths: dict = field(default_factory=dict)  # (i, j) with i < j -> GeoPolyline

    def pairs(self):
        n = len(self.labels)
        for i in range(n):
            for j in range(i + 1, n):
                yield i, j, float(self.lengths[i, j])


def _field_row(grid: TerrainGrid, sites: Sequence[GeoPoint], labels: Sequence[str], i: int):
    fld = solve_arrival(grid, sites[i])
    out = {}
    for j in range(i + 1, len(sites)):
        cell = grid.locate(sites[j])
        val = float(fld.arrival[cell])
        if not math.isfinite(val):
            raise UnreachableError(f"site {labels[j]} is not reachable from site {labels[i]}")
        out[j] = (val, trace_path(fld, sites[j]))
    return i, out


def pairwise_lengths(grid: TerrainGrid, sites: Sequence[GeoPoint],
                     labels: Sequence[str] | None = None, workers: int = 1) -> CostMatrix:
    """FMM length for every pair of sites.

    One arrival field is solved per site; the (i, j) entry is read from the
    field of the lower-indexed site, which makes the matrix symmetric by
    construction.
    """
    n = len(sites)
    if n < 2:
        raise ValueError("need at least two sites")
    labels = tuple(labels) if labels is not None else tuple(str(k + 1) for k in range(n))
    if len(labels) != n:
        raise ValueError("labels and sites differ in length")
    cells = []
    for k, p in enumerate(sites):
        try:
            cells.append(grid.snap(p))
        except GridError as exc:
            raise GridError(f"site {labels[k]}: {exc}") from None
    seen: dict = {}
    for k, cell in enumerate(cells):
        if cell in seen:
            raise ValueError(f"coincident sites {labels[seen[cell]]} and {labels[k]} share cell {cell}")
        seen[cell] = k

    L = np.zeros((n, n))
    paths = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_field_row, [grid] * (n - 1), [list(sites)] * (n - 1),
                               [labels] * (n - 1), range(n - 1)))
    else:
        rows = [_field_row(grid, sites, labels, i) for i in range(n - 1)]
    for i, out in rows:
        for j, (val, poly) in out.items():
            L[i, j] = L[j, i] = val
            paths[(i, j)] = poly
    return CostMatrix(labels, L, paths)
