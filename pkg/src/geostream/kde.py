"""Quartic-kernel density rasters over projected tweet locations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .records import GeoPoint

EARTH_RADIUS_M = 6_371_000.0
DEFAULT_BANDWIDTH = 1000.0
DEFAULT_CELL = 100.0
NODATA = -9999
_CHUNK_CELLS = 2_000_000


@dataclass
class DensityGrid:
    """Density raster; ``values[0]`` is the northernmost row.

    Values are points per square metre, so ``values.sum() * cell_size**2``
    approximates the number of contributing points.
    """

    xll: float
    yll: float
    cell_size: float
    values: np.ndarray
    ref_lat: float = 0.0

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        x = self.xll + (col + 0.5) * self.cell_size
        y = self.yll + (self.nrows - row - 0.5) * self.cell_size
        return x, y

    def mass(self) -> float:
        return float(self.values.sum() * self.cell_size**2)


def project(points: Sequence[GeoPoint], ref_lat: float) -> np.ndarray:
    """Equirectangular projection to metres about ``ref_lat``; returns an (N, 2) array."""
    lon = np.array([p.lon for p in points], dtype=float)
    lat = np.array([p.lat for p in points], dtype=float)
    if lat.size and np.abs(lat).max() > 85.0:
        raise ValueError("projection is limited to latitudes within ±85°")
    x = EARTH_RADIUS_M * np.radians(lon) * math.cos(math.radians(ref_lat))
    y = EARTH_RADIUS_M * np.radians(lat)
    return np.column_stack([x, y])


def default_ref_lat(points: Sequence[GeoPoint]) -> float:
    lats = [p.lat for p in points]
    return (min(lats) + max(lats)) / 2.0


def kde(
    xy: np.ndarray,
    bandwidth: float = DEFAULT_BANDWIDTH,
    cell_size: float = DEFAULT_CELL,
    extent: tuple[float, float, float, float] | None = None,
    ref_lat: float = 0.0,
) -> DensityGrid:
    """Quartic kernel density of planar points evaluated at cell centres.

    ``extent`` is ``(xmin, ymin, xmax, ymax)`` in metres; by default the point
    hull padded by one bandwidth.
    """
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if bandwidth <= 0 or cell_size <= 0:
        raise ValueError("bandwidth and cell_size must be positive")
    if len(xy) == 0:
        raise ValueError("kde needs at least one point")
    if extent is None:
        xmin, ymin = xy.min(axis=0) - bandwidth
        xmax, ymax = xy.max(axis=0) + bandwidth
    else:
        xmin, ymin, xmax, ymax = map(float, extent)
        if xmax <= xmin or ymax <= ymin:
            raise ValueError(f"empty extent {extent!r}")
    ncols = max(1, math.ceil(round((xmax - xmin) / cell_size, 9)))
    nrows = max(1, math.ceil(round((ymax - ymin) / cell_size, 9)))

    # accumulate with row 0 at the south edge, flip once at the end
    acc = np.zeros(nrows * ncols, dtype=float)
    h2 = bandwidth * bandwidth
    peak = 3.0 / (math.pi * h2)
    w = math.ceil(bandwidth / cell_size) + 1
    off = np.arange(-w, w + 1)
    step = max(1, _CHUNK_CELLS // off.size**2)
    for start in range(0, len(xy), step):
        chunk = xy[start:start + step]
        c0 = np.floor((chunk[:, 0] - xmin) / cell_size).astype(np.int64)
        r0 = np.floor((chunk[:, 1] - ymin) / cell_size).astype(np.int64)
        cols = c0[:, None, None] + off[None, None, :]
        rows = r0[:, None, None] + off[None, :, None]
        cols, rows = np.broadcast_arrays(cols, rows)
        dx = xmin + (cols + 0.5) * cell_size - chunk[:, 0, None, None]
        dy = ymin + (rows + 0.5) * cell_size - chunk[:, 1, None, None]
        u = (dx * dx + dy * dy) / h2
        keep = (u < 1.0) & (cols >= 0) & (cols < ncols) & (rows >= 0) & (rows < nrows)
        k = peak * (1.0 - u[keep]) ** 2
        np.add.at(acc, rows[keep] * ncols + cols[keep], k)
    values = acc.reshape(nrows, ncols)[::-1].copy()
    return DensityGrid(float(xmin), float(ymin), float(cell_size), values, ref_lat)


def kde_points(
    points: Sequence[GeoPoint],
    bandwidth: float = DEFAULT_BANDWIDTH,
    cell_size: float = DEFAULT_CELL,
    ref_lat: float | None = None,
) -> DensityGrid:
    """Project lon/lat points and rasterise them with :func:`kde`."""
    if not points:
        raise ValueError("kde needs at least one point")
    if ref_lat is None:
        ref_lat = default_ref_lat(points)
    return kde(project(points, ref_lat), bandwidth, cell_size, ref_lat=ref_lat)


@dataclass(frozen=True)
class Hotspot:
    row: int
    col: int
    x_center: float
    y_center: float
    value: float


def hotspots(grid: DensityGrid, quantile: float = 0.95) -> list[Hotspot]:
    """Cells strictly above the ``quantile`` of positive cell values, densest first."""
    positive = grid.values[grid.values > 0]
    if positive.size == 0:
        return []
    cut = np.quantile(positive, quantile)
    rows, cols = np.nonzero(grid.values > cut)
    vals = grid.values[rows, cols]
    order = np.lexsort((cols, rows, -vals))
    out = []
    for i in order:
        r, c = int(rows[i]), int(cols[i])
        x, y = grid.cell_center(r, c)
        out.append(Hotspot(r, c, x, y, float(vals[i])))
    return out


def hotspots_csv(spots: Sequence[Hotspot]) -> str:
    lines = ["row,col,x_center,y_center,value"]
    lines += [f"{s.row},{s.col},{s.x_center!r},{s.y_center!r},{s.value!r}" for s in spots]
    return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    if v != v:
        return str(NODATA)
    return "0" if v == 0 else repr(float(v))


def export_grid(grid: DensityGrid, path: str | Path) -> None:
    """Write an ESRI ASCII raster, northern row first."""
    lines = [
        f"NCOLS {grid.ncols}",
        f"NROWS {grid.nrows}",
        f"XLLCORNER {_fmt(grid.xll)}",
        f"YLLCORNER {_fmt(grid.yll)}",
        f"CELLSIZE {_fmt(grid.cell_size)}",
        f"NODATA_VALUE {NODATA}",
    ]
    lines += [" ".join(_fmt(v) for v in row) for row in grid.values.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def import_grid(path: str | Path) -> DensityGrid:
    with open(path, encoding="ascii") as fh:
        header = {}
        for _ in range(6):
            key, value = fh.readline().split()
            header[key.upper()] = value
        ncols, nrows = int(header["NCOLS"]), int(header["NROWS"])
        nodata = float(header["NODATA_VALUE"])
        values = np.array(
            [[float(v) for v in fh.readline().split()] for _ in range(nrows)], dtype=float
        ).reshape(nrows, ncols)
    values[values == nodata] = np.nan
    return DensityGrid(
        float(header["XLLCORNER"]), float(header["YLLCORNER"]), float(header["CELLSIZE"]), values
    )
