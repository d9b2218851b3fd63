"""Ordered point patterns with a distinguished center, and cross construction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dem import DemCloud, Point3, _round_half_down
from .errors import ConstructionError


@dataclass(frozen=True, eq=False)
class PointPattern:
    """``m + 1`` points in a fixed order; index 0 is the center.

    ``arms`` optionally records, per arm, the ordered point indices that belong
    to it (center excluded).
    """

    coords: np.ndarray
    arms: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 3 or coords.shape[0] < 1:
            raise ValueError(f"coords must have shape (n >= 1, 3), got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("pattern coordinates must be finite")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        if self.arms is not None:
            arms = tuple(tuple(int(k) for k in arm) for arm in self.arms)
            n = coords.shape[0]
            for arm in arms:
                if any(k < 1 or k >= n for k in arm):
                    raise ValueError("arm indices must lie in 1..m")
            object.__setattr__(self, "arms", arms)

    @classmethod
    def from_points(cls, points, arms=None) -> "PointPattern":
        return cls(np.array([(p.x, p.y, p.z) for p in points], dtype=np.float64), arms)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def center(self) -> Point3:
        return Point3(*map(float, self.coords[0]))

    @property
    def points(self) -> list[Point3]:
        return [Point3(*map(float, row)) for row in self.coords]

    def replace_coords(self, coords: np.ndarray) -> "PointPattern":
        return PointPattern(coords, self.arms)


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotate(pattern: PointPattern, theta: float) -> PointPattern:
    """Rotate about the vertical axis through the pattern center; z is untouched."""
    if theta == 0.0:
        return pattern
    xy = pattern.coords[:, :2]
    c0 = xy[0]
    out = pattern.coords.copy()
    out[:, :2] = c0 + (xy - c0) @ rotation_matrix(theta).T
    return pattern.replace_coords(out)


def translate_xy(pattern: PointPattern, v) -> PointPattern:
    out = pattern.coords.copy()
    out[:, 0] += v[0]
    out[:, 1] += v[1]
    return pattern.replace_coords(out)


def bearing_direction(alpha_deg: float) -> tuple[float, float]:
    """Unit vector for a bearing measured anti-clockwise from North (+y)."""
    a = math.radians(alpha_deg)
    return (-math.sin(a), math.cos(a))


@dataclass(frozen=True)
class CrossSpec:
    """Layout of a measurement cross: ``n_arms`` arms of equally spaced points."""

    center: tuple[float, float]
    arm_length_points: int = 100
    spacing: float = 1.0
    first_arm_angle: float = 0.0
    n_arms: int = 4

    def __post_init__(self):
        if self.arm_length_points < 1:
            raise ValueError("arm_length_points must be positive")
        if self.n_arms < 1:
            raise ValueError("n_arms must be positive")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def n_points(self) -> int:
        return self.n_arms * self.arm_length_points + 1


def _snap(cloud: DemCloud, x: float, y: float, arm: int | None, k: int) -> tuple[int, int]:
    fi = (y - cloud.origin[1]) / cloud.resolution
    fj = (x - cloud.origin[0]) / cloud.resolution
    i, j = int(_round_half_down(fi)), int(_round_half_down(fj))
    where = "center" if arm is None else f"arm {arm} point {k}"
    if not (0 <= i < cloud.nrows and 0 <= j < cloud.ncols):
        raise ConstructionError(f"{where} at ({x:.3f}, {y:.3f}) falls outside the DEM", arm=arm, index=k)
    if not cloud.valid[i, j]:
        raise ConstructionError(f"{where} at ({x:.3f}, {y:.3f}) falls on a nodata cell", arm=arm, index=k)
    return i, j


def build_cross(cloud: DemCloud, spec: CrossSpec) -> PointPattern:
    """Lay a cross on the DEM, snapping every nominal position to its nearest node.

    Index 0 is the center; arm ``a`` (1-based) occupies indices
    ``(a - 1) * L + 1 .. a * L`` ordered outwards, where ``L`` is
    ``spec.arm_length_points``.  Arm ``a`` points along bearing
    ``first_arm_angle + (a - 1) * 360 / n_arms`` degrees, anti-clockwise from North.
    """
    ci, cj = _snap(cloud, spec.center[0], spec.center[1], None, 0)
    x0, y0 = float(cloud.node_x(cj)), float(cloud.node_y(ci))
    L = spec.arm_length_points
    coords = np.empty((spec.n_points, 3))
    coords[0] = (x0, y0, cloud.heights[ci, cj])
    arms = []
    step = 360.0 / spec.n_arms
    for a in range(spec.n_arms):
        ux, uy = bearing_direction(spec.first_arm_angle + a * step)
        arm = []
        for k in range(1, L + 1):
            idx = a * L + k
            i, j = _snap(cloud, x0 + k * spec.spacing * ux, y0 + k * spec.spacing * uy, a + 1, idx)
            coords[idx] = (cloud.node_x(j), cloud.node_y(i), cloud.heights[i, j])
            arm.append(idx)
        arms.append(tuple(arm))
    return PointPattern(coords, tuple(arms))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def pattern_to_dict(pattern: PointPattern) -> dict:
    out = {
        "center_index": 0,
        "points": [{"x": float(x), "y": float(y), "z": float(z)} for x, y, z in pattern.coords],
    }
    if pattern.arms is not None:
        out["arms"] = [list(arm) for arm in pattern.arms]
    return out


def pattern_from_dict(data: dict) -> PointPattern:
    if data.get("center_index", 0) != 0:
        raise ValueError("only center_index 0 is supported")
    try:
        coords = [(float(p["x"]), float(p["y"]), float(p["z"])) for p in data["points"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed pattern points: {exc}") from None
    arms = data.get("arms")
    return PointPattern(np.array(coords, dtype=np.float64).reshape(-1, 3), None if arms is None else tuple(map(tuple, arms)))


def save_pattern(pattern: PointPattern, path) -> None:
    Path(path).write_text(json.dumps(pattern_to_dict(pattern), indent=1) + "\n", encoding="utf-8")


def load_pattern(path) -> PointPattern:
    return pattern_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
