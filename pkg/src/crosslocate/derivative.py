"""Chord-normalized height differences along cross arms and target selection.

For an arm with indices ``a_1 < ... < a_L`` the slope at the first point is
the one-sided difference to the center, ``(z[a_2] - z[0]) / |xy[a_2] - xy[0]|``;
interior points use the central difference ``(z[k+1] - z[k-1]) / |xy[k+1] - xy[k-1]|``
and the arm end has no value.  On the standard 401-point cross this gives
values on ``{1..399} minus {100, 200, 300}``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import DegenerateGeometryError
from .pattern import PointPattern

DEFAULT_SELECT = 9


@dataclass(frozen=True)
class ArmDerivative:
    values: dict[int, float]
    groups: tuple[tuple[int, ...], ...]
    endpoints: tuple[int, ...]


def _chord_ratio(coords, k_hi: int, k_lo: int, k: int) -> float:
    dx = coords[k_hi, 0] - coords[k_lo, 0]
    dy = coords[k_hi, 1] - coords[k_lo, 1]
    chord = math.sqrt(dy * dy + dx * dx)
    if chord == 0.0:
        raise DegenerateGeometryError(f"zero chord length at index {k}", index=k)
    return float((coords[k_hi, 2] - coords[k_lo, 2]) / chord)


def arc_derivative(cross: PointPattern) -> ArmDerivative:
    if cross.arms is None:
        raise ValueError("arc_derivative needs a pattern with an arm layout")
    c = cross.coords
    values: dict[int, float] = {}
    groups = []
    for arm in cross.arms:
        if len(arm) < 2:
            raise ValueError("every arm needs at least two points")
        values[arm[0]] = _chord_ratio(c, arm[1], 0, arm[0])
        for pos in range(1, len(arm) - 1):
            values[arm[pos]] = _chord_ratio(c, arm[pos + 1], arm[pos - 1], arm[pos])
        groups.append(tuple(arm[:-1]))
    endpoints = (0,) + tuple(arm[-1] for arm in cross.arms)
    return ArmDerivative(values=values, groups=tuple(groups), endpoints=endpoints)


def exact_indices(deriv: ArmDerivative, n_select: int = DEFAULT_SELECT, use_abs: bool = False) -> list[int]:
    """Top ``n_select`` slopes of each arm group plus the center and arm ends.

    Selection is by signed value unless ``use_abs``; equal values prefer the
    smaller index.
    """
    chosen = set(deriv.endpoints)
    for group in deriv.groups:
        key = (lambda k: (-abs(deriv.values[k]), k)) if use_abs else (lambda k: (-deriv.values[k], k))
        chosen.update(sorted(group, key=key)[:n_select])
    return sorted(chosen)


def extract_target(cross: PointPattern, indices) -> PointPattern:
    """Sub-pattern at ``indices`` (sorted, containing 0), keeping their order."""
    indices = [int(k) for k in indices]
    n = len(cross)
    if not indices or indices[0] != 0:
        raise ValueError("indices must be sorted and start with the center index 0")
    if any(k < 0 or k >= n for k in indices):
        raise ValueError(f"indices must lie in 0..{n - 1}")
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ValueError("indices must be strictly increasing")
    arms = None
    if cross.arms is not None:
        where = {k: pos for pos, k in enumerate(indices)}
        arms = tuple(tuple(where[k] for k in arm if k in where) for arm in cross.arms)
        arms = tuple(arm for arm in arms if arm) or None
    return PointPattern(cross.coords[indices], arms)


def save_derivative_csv(deriv: ArmDerivative, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "dz_ds"])
        for k in sorted(deriv.values):
            w.writerow([k, repr(deriv.values[k])])
