"""Terrain rasters and geographic distance primitives.

Grids are stored south row first (row index grows with latitude); the ASCII
grid format on disk is north row first.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

EARTH_RADIUS_KM = 6371.0088


class GridError(ValueError):
    """Raised for malformed or unusable terrain grids."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinates ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon < 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180)")


def great_circle_km(p: GeoPoint, q: GeoPoint, radius_km: float = EARTH_RADIUS_KM) -> float:
    """Haversine distance between two points on a sphere."""
    phi1, phi2 = math.radians(p.lat), math.radians(q.lat)
    dphi = phi2 - phi1
    dlam = math.radians(q.lon - p.lon)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2.0 * radius_km * math.asin(math.sqrt(min(1.0, max(0.0, a))))


def _haversine_np(lat1, lon1, lat2, lon2, radius_km):
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dlam = np.radians(lon2 - lon1)
    a = np.sin((phi2 - phi1) / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2) ** 2
    return 2.0 * radius_km * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


@dataclass(frozen=True, eq=False)
class TerrainGrid:
    """Regular lat/lon raster of elevations (meters) with a traversability mask.

    ``origin`` is the center of the south-west cell. ``elevation[r, c]`` is the
    cell at latitude ``origin.lat + r * cell_size``. No-data cells hold NaN.
    """

    origin: GeoPoint
    cell_size: float
    elevation: np.ndarray
    mask: np.ndarray
    nodata_value: float | None = None
    radius_km: float = EARTH_RADIUS_KM
    _steps: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        elev = np.array(self.elevation, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if elev.ndim != 2 or elev.size == 0:
            raise GridError("elevation must be a non-empty 2-D array")
        if mask.shape != elev.shape:
            raise GridError(f"mask shape {mask.shape} != elevation shape {elev.shape}")
        if not (math.isfinite(self.cell_size) and self.cell_size > 0):
            raise GridError(f"cell_size must be positive, got {self.cell_size}")
        if not mask.any():
            raise GridError("no traversable region")
        if not np.isfinite(elev[mask]).all():
            raise GridError("traversable cells must have finite elevation")
        top = self.origin.lat + (elev.shape[0] - 1) * self.cell_size
        if top > 90.0 + 1e-9:
            raise GridError(f"grid extends past the pole (top row at {top})")
        elev.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "elevation", elev)
        object.__setattr__(self, "mask", mask)

    @property
    def n_rows(self) -> int:
        return self.elevation.shape[0]

    @property
    def n_cols(self) -> int:
        return self.elevation.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.elevation.shape

    def lat(self, row: float) -> float:
        return self.origin.lat + row * self.cell_size

    def lon(self, col: float) -> float:
        return self.origin.lon + col * self.cell_size

    def cell_center(self, cell: tuple[int, int]) -> GeoPoint:
        r, c = cell
        return GeoPoint(self.lat(r), _wrap_lon(self.lon(c)))

    def point_at(self, row: float, col: float) -> GeoPoint:
        """Geographic point at fractional grid coordinates."""
        return GeoPoint(self.lat(row), _wrap_lon(self.lon(col)))

    def locate(self, p: GeoPoint) -> tuple[int, int]:
        """Index of the cell whose center is nearest to ``p``."""
        r = round((p.lat - self.origin.lat) / self.cell_size)
        c = round((p.lon - self.origin.lon) / self.cell_size)
        if not (0 <= r < self.n_rows and 0 <= c < self.n_cols):
            raise GridError(f"point ({p.lat}, {p.lon}) lies outside the grid")
        return int(r), int(c)

    def snap(self, p: GeoPoint) -> tuple[int, int]:
        """Like :meth:`locate`, but the cell must be traversable."""
        cell = self.locate(p)
        if not self.mask[cell]:
            raise GridError(f"point ({p.lat}, {p.lon}) falls on a non-traversable cell {cell}")
        return cell

    def step_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Surface step lengths (km) between 4-neighbors.

        Returns ``(east, north)`` where ``east[r, c]`` joins ``(r, c)`` and
        ``(r, c + 1)`` and ``north[r, c]`` joins ``(r, c)`` and ``(r + 1, c)``.
        Steps touching a masked cell are ``inf``.
        """
        if "ew" not in self._steps:
            rows = self.lat(np.arange(self.n_rows, dtype=float))
            dlon = self.cell_size
            # great-circle span along a parallel depends on the row only
            h_ew = _haversine_np(rows, 0.0, rows, dlon, self.radius_km)
            h_ns = _haversine_np(rows[:-1], 0.0, rows[1:], 0.0, self.radius_km)
            elev_km = np.where(self.mask, self.elevation, np.nan) / 1000.0
            with np.errstate(invalid="ignore"):
                dz_ew = np.diff(elev_km, axis=1)
                dz_ns = np.diff(elev_km, axis=0)
                ew = np.hypot(h_ew[:, None], dz_ew)
                ns = np.hypot(h_ns[:, None], dz_ns)
            ew[~np.isfinite(ew)] = np.inf
            ns[~np.isfinite(ns)] = np.inf
            ew.setflags(write=False)
            ns.setflags(write=False)
            self._steps["ew"], self._steps["ns"] = ew, ns
        return self._steps["ew"], self._steps["ns"]

    def elevation_at(self, row: float, col: float) -> float:
        """Bilinear elevation at fractional coordinates; nearest cell if any corner is masked."""
        r0 = min(max(int(math.floor(row)), 0), self.n_rows - 1)
        c0 = min(max(int(math.floor(col)), 0), self.n_cols - 1)
        r1, c1 = min(r0 + 1, self.n_rows - 1), min(c0 + 1, self.n_cols - 1)
        corners = [(r0, c0), (r0, c1), (r1, c0), (r1, c1)]
        if all(self.mask[rc] for rc in corners):
            fr, fc = row - r0, col - c0
            e = self.elevation
            return float(
                (1 - fr) * ((1 - fc) * e[r0, c0] + fc * e[r0, c1])
                + fr * ((1 - fc) * e[r1, c0] + fc * e[r1, c1])
            )
        near = (min(max(round(row), 0), self.n_rows - 1), min(max(round(col), 0), self.n_cols - 1))
        if self.mask[near]:
            return float(self.elevation[near])
        return float(np.nanmean([self.elevation[rc] for rc in corners if self.mask[rc]] or [0.0]))


def _wrap_lon(lon: float) -> float:
    return (lon + 180.0) % 360.0 - 180.0


def surface_step_km(grid: TerrainGrid, cell_a: tuple[int, int], cell_b: tuple[int, int]) -> float:
    """Length of the surface element joining two 4-neighbor cells.

    The horizontal great-circle span between the cell centers is combined with
    the elevation difference as a Euclidean hypotenuse.
    """
    (ra, ca), (rb, cb) = cell_a, cell_b
    if abs(ra - rb) + abs(ca - cb) != 1:
        raise GridError(f"cells {cell_a} and {cell_b} are not 4-neighbors")
    for cell in (cell_a, cell_b):
        if not (0 <= cell[0] < grid.n_rows and 0 <= cell[1] < grid.n_cols):
            raise GridError(f"cell {cell} outside the grid")
        if not grid.mask[cell]:
            raise GridError(f"cell {cell} is not traversable")
    horizontal = great_circle_km(grid.cell_center(cell_a), grid.cell_center(cell_b), grid.radius_km)
    dz = (grid.elevation[cell_b] - grid.elevation[cell_a]) / 1000.0
    return math.hypot(horizontal, dz)


_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "xllcenter", "yllcorner", "yllcenter", "cellsize", "nodata_value")


def parse_grid(text: str, allow_land: bool = False, radius_km: float = EARTH_RADIUS_KM) -> TerrainGrid:
    """Parse an ASCII grid (north row first).

    Cells equal to the no-data value are masked. Cells at or above sea level
    are masked too unless ``allow_land`` is set.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header: dict[str, str] = {}
    pos = 0
    while pos < len(lines):
        parts = lines[pos].split()
        key = parts[0].lower()
        if key not in _HEADER_KEYS:
            break
        if len(parts) != 2:
            raise GridError(f"malformed header line: {lines[pos]!r}")
        header[key] = parts[1]
        pos += 1
    try:
        ncols = int(header["ncols"])
        nrows = int(header["nrows"])
        cellsize = float(header["cellsize"])
    except KeyError as exc:
        raise GridError(f"missing header field {exc.args[0]}") from None
    except ValueError as exc:
        raise GridError(f"malformed header value: {exc}") from None
    if ncols <= 0 or nrows <= 0:
        raise GridError("ncols and nrows must be positive")
    if not cellsize > 0:
        raise GridError("cellsize must be positive")
    try:
        if "xllcenter" in header:
            x0 = float(header["xllcenter"])
        else:
            x0 = float(header["xllcorner"]) + cellsize / 2
        if "yllcenter" in header:
            y0 = float(header["yllcenter"])
        else:
            y0 = float(header["yllcorner"]) + cellsize / 2
    except KeyError as exc:
        raise GridError(f"missing header field {exc.args[0]}") from None
    nodata = float(header["nodata_value"]) if "nodata_value" in header else None

    body = lines[pos:]
    if len(body) != nrows:
        raise GridError(f"expected {nrows} data rows, found {len(body)}")
    values = np.empty((nrows, ncols), dtype=float)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != ncols:
            raise GridError(f"row {i + 1} has {len(parts)} values, expected {ncols}")
        try:
            values[i] = [float(v) for v in parts]
        except ValueError:
            raise GridError(f"row {i + 1} contains a non-numeric value") from None
    values = values[::-1]  # south row first
    nodata_mask = np.isclose(values, nodata) if nodata is not None else np.zeros(values.shape, bool)
    nodata_mask |= ~np.isfinite(values)
    values[nodata_mask] = np.nan
    mask = ~nodata_mask
    if not allow_land:
        mask &= values < 0.0
    if not mask.any():
        raise GridError("no traversable region")
    return TerrainGrid(
        origin=GeoPoint(y0, x0),
        cell_size=cellsize,
        elevation=values,
        mask=mask,
        nodata_value=nodata,
        radius_km=radius_km,
    )


def load_grid(source: str | Path | TextIO, allow_land: bool = False,
              radius_km: float = EARTH_RADIUS_KM) -> TerrainGrid:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    return parse_grid(text, allow_land=allow_land, radius_km=radius_km)


def dump_grid(grid: TerrainGrid) -> str:
    """Serialize to the ASCII grid format. No-data cells use the grid's no-data value."""
    nodata = grid.nodata_value if grid.nodata_value is not None else -9999.0
    out = io.StringIO()
    half = grid.cell_size / 2
    out.write(f"ncols {grid.n_cols}\n")
    out.write(f"nrows {grid.n_rows}\n")
    out.write(f"xllcorner {grid.origin.lon - half!r}\n")
    out.write(f"yllcorner {grid.origin.lat - half!r}\n")
    out.write(f"cellsize {grid.cell_size!r}\n")
    out.write(f"NODATA_value {_fmt(nodata)}\n")
    for row in grid.elevation[::-1]:
        out.write(" ".join(_fmt(nodata) if not math.isfinite(v) else _fmt(v) for v in row))
        out.write("\n")
    return out.getvalue()


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def resample(grid: TerrainGrid, cell_size: float) -> TerrainGrid:
    """Nearest-neighbor resampling onto a grid with a different cell size."""
    if not cell_size > 0:
        raise GridError("cell_size must be positive")
    south = grid.origin.lat - grid.cell_size / 2
    west = grid.origin.lon - grid.cell_size / 2
    height = grid.n_rows * grid.cell_size
    width = grid.n_cols * grid.cell_size
    nrows = max(1, int(round(height / cell_size)))
    ncols = max(1, int(round(width / cell_size)))
    lat_c = south + (np.arange(nrows) + 0.5) * cell_size
    lon_c = west + (np.arange(ncols) + 0.5) * cell_size
    ri = np.clip(np.floor((lat_c - south) / grid.cell_size).astype(int), 0, grid.n_rows - 1)
    ci = np.clip(np.floor((lon_c - west) / grid.cell_size).astype(int), 0, grid.n_cols - 1)
    return TerrainGrid(
        origin=GeoPoint(lat_c[0], lon_c[0]),
        cell_size=cell_size,
        elevation=grid.elevation[np.ix_(ri, ci)],
        mask=grid.mask[np.ix_(ri, ci)],
        nodata_value=grid.nodata_value,
        radius_km=grid.radius_km,
    )
