"""Regular-grid elevation clouds: ingestion, export and spatial queries.

A :class:`DemCloud` stores heights on an axis-aligned lattice of nodes.  Node
``(i, j)`` sits at ``origin + (j * resolution, i * resolution)``; row ``i = 0``
is the southern-most row, so row indices grow northwards.  "Row-major index"
throughout the package means ``i * ncols + j`` in this orientation.

ESRI ASCII grids store cell values north row first and georeference the lower
left cell *corner*; node coordinates here are cell centers, so a file with
``xllcorner = 0`` and ``cellsize = 1`` has its first column of nodes at
``x = 0.5``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GridFormatError, GridLookupError

#: Absolute tolerance (meters) for treating a query as lying on a grid node.
NODE_TOL = 1e-6


@dataclass(frozen=True, slots=True)
class Point3:
    """A single sample in planar meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"Point3.{name} must be finite, got {value!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True, eq=False)
class DemCloud:
    """Elevation raster with exact node lookup.

    ``heights`` has shape ``(nrows, ncols)``; nodata cells hold NaN and are
    flagged ``False`` in ``valid``.
    """

    origin: tuple[float, float]
    resolution: float
    heights: np.ndarray
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        heights = np.array(self.heights, dtype=np.float64)
        if heights.ndim != 2 or heights.shape[0] < 1 or heights.shape[1] < 1:
            raise ValueError(f"heights must be a non-empty 2-D array, got shape {heights.shape}")
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise ValueError(f"resolution must be positive, got {self.resolution!r}")
        if self.valid is None:
            valid = np.isfinite(heights)
        else:
            valid = np.array(self.valid, dtype=bool)
            if valid.shape != heights.shape:
                raise ValueError("valid mask shape does not match heights")
            if not np.all(np.isfinite(heights[valid])):
                raise ValueError("every non-nodata height must be finite")
        heights[~valid] = np.nan
        heights.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "valid", valid)

    @property
    def nrows(self) -> int:
        return self.heights.shape[0]

    @property
    def ncols(self) -> int:
        return self.heights.shape[1]

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def node_x(self, j):
        return self.origin[0] + j * self.resolution

    def node_y(self, i):
        return self.origin[1] + i * self.resolution

    def node(self, i: int, j: int) -> Point3:
        if not (0 <= i < self.nrows and 0 <= j < self.ncols) or not self.valid[i, j]:
            raise GridLookupError(f"cell ({i}, {j}) is outside the grid or nodata")
        return Point3(float(self.node_x(j)), float(self.node_y(i)), float(self.heights[i, j]))

    def valid_points(self) -> np.ndarray:
        """All non-nodata nodes as an ``(N, 3)`` array in row-major order."""
        ii, jj = np.nonzero(self.valid)
        return np.column_stack([self.node_x(jj), self.node_y(ii), self.heights[ii, jj]])

    def extent(self) -> tuple[float, float, float, float]:
        """Node bounding box ``(xmin, ymin, xmax, ymax)``."""
        return (
            self.origin[0],
            self.origin[1],
            float(self.node_x(self.ncols - 1)),
            float(self.node_y(self.nrows - 1)),
        )


# ---------------------------------------------------------------------------
# ESRI ASCII grid
# ---------------------------------------------------------------------------

_HEADER_KEYS = {"ncols", "nrows", "xllcorner", "yllcorner", "xllcenter", "yllcenter", "cellsize", "nodata_value"}


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_ascii_grid(path) -> DemCloud:
    """Read an ESRI ASCII grid (``.asc``) file.

    Each data line must hold exactly one raster row.  Errors carry the
    offending 1-based line number.
    """
    header: dict[str, str] = {}
    rows: list[list[float]] = []
    nodata = None
    ncols = nrows = 0
    with open(path, encoding="utf-8") as fh:
        lineno = 0
        in_header = True
        for raw in fh:
            lineno += 1
            tokens = raw.split()
            if not tokens:
                continue
            if in_header and not _is_number(tokens[0]):
                key = tokens[0].lower()
                if key not in _HEADER_KEYS or len(tokens) != 2:
                    raise GridFormatError(f"malformed header entry {raw.strip()!r}", lineno)
                header[key] = tokens[1]
                continue
            if in_header:
                in_header = False
                ncols, nrows, nodata = _check_header(header, lineno)
            if len(tokens) != ncols:
                raise GridFormatError(f"expected {ncols} values, found {len(tokens)}", lineno)
            try:
                values = [float(t) for t in tokens]
            except ValueError:
                bad = next(t for t in tokens if not _is_number(t))
                raise GridFormatError(f"non-numeric value {bad!r}", lineno) from None
            rows.append(values)
            if len(rows) > nrows:
                raise GridFormatError(f"more than nrows={nrows} data rows", lineno)
    if in_header:
        _check_header(header, lineno + 1)
        raise GridFormatError("no data rows", lineno + 1)
    if len(rows) != nrows:
        raise GridFormatError(f"expected {nrows} data rows, found {len(rows)}", lineno)

    cellsize = float(header["cellsize"])
    # North row first in the file; flip to south-first storage.
    grid = np.array(rows[::-1], dtype=np.float64)
    valid = np.ones(grid.shape, dtype=bool) if nodata is None else grid != nodata
    if not np.all(np.isfinite(grid[valid])):
        raise GridFormatError("non-finite height outside nodata cells")
    if "xllcenter" in header:
        x0 = float(header["xllcenter"])
    else:
        x0 = float(header["xllcorner"]) + cellsize / 2
    if "yllcenter" in header:
        y0 = float(header["yllcenter"])
    else:
        y0 = float(header["yllcorner"]) + cellsize / 2
    return DemCloud(origin=(x0, y0), resolution=cellsize, heights=grid, valid=valid)


def _check_header(header: dict[str, str], lineno: int):
    for key in ("ncols", "nrows", "cellsize"):
        if key not in header:
            raise GridFormatError(f"missing header key {key!r}", lineno)
    if not (("xllcorner" in header) ^ ("xllcenter" in header)):
        raise GridFormatError("exactly one of xllcorner/xllcenter is required", lineno)
    if not (("yllcorner" in header) ^ ("yllcenter" in header)):
        raise GridFormatError("exactly one of yllcorner/yllcenter is required", lineno)
    try:
        ncols = int(header["ncols"])
        nrows = int(header["nrows"])
        cellsize = float(header["cellsize"])
        for key in ("xllcorner", "yllcorner", "xllcenter", "yllcenter"):
            if key in header:
                float(header[key])
        nodata = float(header["nodata_value"]) if "nodata_value" in header else None
    except ValueError as exc:
        raise GridFormatError(f"bad header value: {exc}", lineno) from None
    if ncols < 1 or nrows < 1:
        raise GridFormatError("ncols and nrows must be positive", lineno)
    if not (cellsize > 0 and math.isfinite(cellsize)):
        raise GridFormatError("cellsize must be positive", lineno)
    return ncols, nrows, nodata


def save_ascii_grid(cloud: DemCloud, path, nodata_value: float = -9999.0) -> None:
    """Write ``cloud`` as an ESRI ASCII grid; heights round-trip exactly."""
    if np.any(cloud.heights[cloud.valid] == nodata_value):
        raise ValueError(f"nodata_value {nodata_value!r} collides with a stored height")
    half = cloud.resolution / 2
    nodata_text = repr(float(nodata_value))
    lines = [
        f"ncols {cloud.ncols}",
        f"nrows {cloud.nrows}",
        f"xllcorner {cloud.origin[0] - half!r}",
        f"yllcorner {cloud.origin[1] - half!r}",
        f"cellsize {cloud.resolution!r}",
        f"NODATA_value {nodata_text}",
    ]
    for i in range(cloud.nrows - 1, -1, -1):
        row = cloud.heights[i]
        mask = cloud.valid[i]
        lines.append(" ".join(repr(v) if m else nodata_text for v, m in zip(row.tolist(), mask.tolist())))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# XYZ CSV
# ---------------------------------------------------------------------------


def load_xyz_csv(path) -> DemCloud:
    """Read ``x,y,z`` rows and rebuild the regular grid they sample.

    A header row is optional.  Grid cells without a row become nodata.
    """
    xs: list[float] = []
    ys: list[float] = []
    zs: list[float] = []
    cols = (0, 1, 2)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            row = [c.strip() for c in row]
            if not row or all(not c for c in row):
                continue
            if lineno == 1 and not all(_is_number(c) for c in row):
                names = [c.lower() for c in row]
                try:
                    cols = (names.index("x"), names.index("y"), names.index("z"))
                except ValueError:
                    raise GridFormatError(f"header must name columns x, y, z; got {row}", lineno) from None
                continue
            if len(row) <= max(cols):
                raise GridFormatError(f"expected at least {max(cols) + 1} columns, found {len(row)}", lineno)
            try:
                x, y, z = (float(row[c]) for c in cols)
            except ValueError:
                raise GridFormatError(f"non-numeric value in {row}", lineno) from None
            if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
                raise GridFormatError("non-finite coordinate", lineno)
            xs.append(x)
            ys.append(y)
            zs.append(z)
    if not xs:
        raise GridFormatError("no data rows")
    x = np.array(xs)
    y = np.array(ys)
    res_x = _axis_spacing(x)
    res_y = _axis_spacing(y)
    if res_x is None and res_y is None:
        raise GridFormatError("cannot infer grid spacing from a single point")
    if res_x is not None and res_y is not None and abs(res_x - res_y) > NODE_TOL:
        raise GridFormatError(f"non-square cells: dx={res_x} dy={res_y}")
    res = res_x if res_x is not None else res_y
    x0, y0 = float(x.min()), float(y.min())
    jj = _axis_index(x, x0, res, "x")
    ii = _axis_index(y, y0, res, "y")
    nrows, ncols = int(ii.max()) + 1, int(jj.max()) + 1
    flat = ii * ncols + jj
    if np.unique(flat).size != flat.size:
        dup = flat[np.argsort(flat, kind="stable")]
        k = int(dup[np.nonzero(np.diff(dup) == 0)[0][0]])
        raise GridFormatError(f"duplicate (x, y) at grid cell {divmod(k, ncols)}")
    heights = np.full((nrows, ncols), np.nan)
    valid = np.zeros((nrows, ncols), dtype=bool)
    heights[ii, jj] = zs
    valid[ii, jj] = True
    return DemCloud(origin=(x0, y0), resolution=res, heights=heights, valid=valid)


def _axis_spacing(values: np.ndarray) -> float | None:
    u = np.unique(values)
    if u.size < 2:
        return None
    return float(np.diff(u).min())


def _axis_index(values: np.ndarray, start: float, res: float, name: str) -> np.ndarray:
    k = np.rint((values - start) / res)
    err = np.abs(start + k * res - values)
    if np.any(err > NODE_TOL):
        bad = float(values[np.argmax(err)])
        raise GridFormatError(f"irregular {name} spacing at {name}={bad!r} (expected multiples of {res!r})")
    return k.astype(np.int64)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def val_z(cloud: DemCloud, x: float, y: float) -> float:
    """Stored height at the node located at ``(x, y)``; no interpolation."""
    j = int(round((x - cloud.origin[0]) / cloud.resolution))
    i = int(round((y - cloud.origin[1]) / cloud.resolution))
    if not (0 <= i < cloud.nrows and 0 <= j < cloud.ncols):
        raise GridLookupError(f"({x}, {y}) is outside the grid")
    if abs(cloud.node_x(j) - x) > NODE_TOL or abs(cloud.node_y(i) - y) > NODE_TOL:
        raise GridLookupError(f"({x}, {y}) is not a grid node")
    if not cloud.valid[i, j]:
        raise GridLookupError(f"({x}, {y}) is a nodata cell")
    return float(cloud.heights[i, j])


def _round_half_down(f):
    # Equidistant nodes resolve to the smaller index.
    return np.ceil(np.asarray(f) - 0.5).astype(np.int64)


def _scan_nearest(cloud: DemCloud, fi: float, fj: float) -> tuple[int, int]:
    """Ring search around the rounded node; exact, smallest row-major index on ties."""
    bi, bj = int(_round_half_down(fi)), int(_round_half_down(fj))
    gap_i = max(0, -bi, bi - (cloud.nrows - 1))
    gap_j = max(0, -bj, bj - (cloud.ncols - 1))
    k = max(1, gap_i, gap_j)
    kmax = max(cloud.nrows, cloud.ncols) + max(gap_i, gap_j) + 1
    while True:
        i0, i1 = max(0, bi - k), min(cloud.nrows - 1, bi + k)
        j0, j1 = max(0, bj - k), min(cloud.ncols - 1, bj + k)
        if i0 <= i1 and j0 <= j1:
            win = cloud.valid[i0 : i1 + 1, j0 : j1 + 1]
            if win.any():
                di = np.arange(i0, i1 + 1) - fi
                dj = np.arange(j0, j1 + 1) - fj
                d2 = di[:, None] ** 2 + dj[None, :] ** 2
                d2 = np.where(win, d2, np.inf)
                flat = int(np.argmin(d2))
                best = d2.flat[flat]
                # Anything outside the window is at least k + 0.5 cells away.
                if best < (k + 0.5) ** 2 or k >= kmax:
                    r, c = divmod(flat, win.shape[1])
                    return i0 + r, j0 + c
        if k >= kmax:
            raise GridLookupError("every cell of the grid is nodata")
        k = min(2 * k, kmax)


def nearest_indices(cloud: DemCloud, fi, fj) -> tuple[np.ndarray, np.ndarray]:
    """Nearest valid node for fractional row/column coordinates (vectorized)."""
    shape = np.broadcast(np.asarray(fi), np.asarray(fj)).shape
    fi = np.broadcast_to(np.asarray(fi, dtype=np.float64), shape).reshape(-1)
    fj = np.broadcast_to(np.asarray(fj, dtype=np.float64), shape).reshape(-1)
    ni = _round_half_down(fi)
    nj = _round_half_down(fj)
    inside = (ni >= 0) & (ni < cloud.nrows) & (nj >= 0) & (nj < cloud.ncols)
    ok = inside.copy()
    ok[inside] = cloud.valid[ni[inside], nj[inside]]
    if not ok.all():
        ni = ni.copy()
        nj = nj.copy()
        for idx in np.flatnonzero(~ok):
            ni[idx], nj[idx] = _scan_nearest(cloud, float(fi[idx]), float(fj[idx]))
    return ni.reshape(shape), nj.reshape(shape)


def nearest_xy(cloud: DemCloud, x: float, y: float) -> Point3:
    """Valid node closest to ``(x, y)`` in the plane."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("query coordinates must be finite")
    fi = (y - cloud.origin[1]) / cloud.resolution
    fj = (x - cloud.origin[0]) / cloud.resolution
    ni, nj = nearest_indices(cloud, fi, fj)
    return cloud.node(int(ni), int(nj))


def candidate_indices(cloud: DemCloud, guess: Point3, r: float, d1: float) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of admissible centers, in row-major order."""
    d = cloud.resolution
    i_lo = max(0, int(math.floor((guess.y - r - cloud.origin[1]) / d)) - 1)
    i_hi = min(cloud.nrows - 1, int(math.ceil((guess.y + r - cloud.origin[1]) / d)) + 1)
    j_lo = max(0, int(math.floor((guess.x - r - cloud.origin[0]) / d)) - 1)
    j_hi = min(cloud.ncols - 1, int(math.ceil((guess.x + r - cloud.origin[0]) / d)) + 1)
    if i_lo > i_hi or j_lo > j_hi:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    ii = np.arange(i_lo, i_hi + 1)
    jj = np.arange(j_lo, j_hi + 1)
    keep_i = np.abs(cloud.node_y(ii) - guess.y) <= r
    keep_j = np.abs(cloud.node_x(jj) - guess.x) <= r
    ii, jj = ii[keep_i], jj[keep_j]
    block = cloud.heights[np.ix_(ii, jj)]
    valid = cloud.valid[np.ix_(ii, jj)]
    with np.errstate(invalid="ignore"):
        mask = valid & (np.abs(block - guess.z) <= d1)
    ri, rj = np.nonzero(mask)
    return ii[ri], jj[rj]


def candidate_centers(cloud: DemCloud, guess: Point3, r: float, d1: float) -> list[Point3]:
    """Valid nodes within the ``r`` box (infinity norm) and ``d1`` of the guess height."""
    ii, jj = candidate_indices(cloud, guess, r, d1)
    return [cloud.node(int(i), int(j)) for i, j in zip(ii, jj)]


def save_xyz_csv(cloud: DemCloud, path) -> None:
    """Write valid nodes as ``x,y,z`` rows (with header) in row-major order."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z"])
        for x, y, z in cloud.valid_points().tolist():
            w.writerow([repr(x), repr(y), repr(z)])


def load_dem(path) -> DemCloud:
    """Dispatch on extension: ``.csv``/``.xyz`` as XYZ rows, anything else as ESRI ASCII."""
    if str(path).lower().endswith((".csv", ".xyz")):
        return load_xyz_csv(path)
    return load_ascii_grid(path)
