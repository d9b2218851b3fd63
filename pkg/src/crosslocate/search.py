"""Grid search over candidate centers and rotation angles.

For every admissible center node and every angle ``2*pi*k/n_angles`` the
reference offsets are rotated, placed at the candidate center and snapped to
the nearest DEM nodes.  The chosen measure compares the rotated reference with
the snapped candidate after both are mapped through the same normalization.
The minimizer is unique by construction: equal values resolve to the smaller
row-major center index, then the smaller angle index.
"""

from __future__ import annotations

import heapq
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .dem import DemCloud, Point3, candidate_indices, nearest_indices, NODE_TOL
from .errors import GridLookupError, InfeasibleError, NoCandidatesError
from .measures import (
    MeasureKind,
    assignment_cost,
    least_squares_batch,
    procrustes_batch,
    sq_cost_batch,
    w2_lower_bound_batch,
    w2_value_from_cost,
)
from .normalize import NormalizationParams, apply_array, fit_params, fit_points
from .pattern import PointPattern, rotation_matrix

WINDOWS = ("full", "box", "none")

# Relative/absolute slack on the W2 pruning bound so rounding never discards a tie.
_PRUNE_RTOL = 1e-9
_PRUNE_ATOL = 1e-12
_W2_BATCH = 64


@dataclass(frozen=True)
class SearchConfig:
    r: float = 450.0
    d1: float = 1.0
    n_angles: int = 360
    lam: float = 1.0
    measure: MeasureKind = MeasureKind.WASSERSTEIN
    normalization_window: str = "full"
    top_k: int = 10
    threads: int = 1
    skip_angles_for_procrustes: bool = False

    def __post_init__(self):
        object.__setattr__(self, "measure", MeasureKind.parse(self.measure))
        if self.n_angles < 1:
            raise ValueError("n_angles must be at least 1")
        if not self.d1 > 0:
            raise ValueError("d1 must be positive")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.normalization_window not in WINDOWS:
            raise ValueError(f"normalization_window must be one of {WINDOWS}")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")

    def angle(self, k: int) -> float:
        return 2.0 * math.pi * k / self.n_angles


class Candidate(NamedTuple):
    center: Point3
    angle: float
    angle_index: int
    value: float


@dataclass
class MatchResult:
    best_center: Point3
    best_angle: float
    best_angle_index: int
    best_value: float
    best_pattern: PointPattern
    measure: MeasureKind
    lam: float
    params: NormalizationParams
    n_centers: int
    candidates_evaluated: int
    n_infeasible: int
    top_k: list[Candidate] = field(default_factory=list)

    def to_dict(self) -> dict:
        c = self.best_center
        return {
            "best": {
                "x": c.x,
                "y": c.y,
                "z": c.z,
                "theta_rad": self.best_angle,
                "value": self.best_value,
                "measure": self.measure.value,
                "lambda": self.lam,
            },
            "candidates_evaluated": self.candidates_evaluated,
            "centers": self.n_centers,
            "infeasible": self.n_infeasible,
            "normalization": self.params.to_dict(),
            "top_k": [
                {"x": t.center.x, "y": t.center.y, "z": t.center.z, "theta_rad": t.angle, "value": t.value}
                for t in self.top_k
            ],
            "pattern": [{"x": float(x), "y": float(y), "z": float(z)} for x, y, z in self.best_pattern.coords],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


class Projection(NamedTuple):
    pattern: PointPattern
    nominal: np.ndarray
    feasible: bool


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------


def _rotated_offsets(T: PointPattern, theta: float) -> np.ndarray:
    xy = T.coords[:, :2]
    return (xy - xy[0]) @ rotation_matrix(theta).T


def _snap_batch(cloud: DemCloud, ci: np.ndarray, cj: np.ndarray, offs: np.ndarray, d1: float):
    """Snap rotated offsets around each center; returns node indices and feasibility."""
    d = cloud.resolution
    fi = ci[:, None] + offs[None, :, 1] / d
    fj = cj[:, None] + offs[None, :, 0] / d
    ni, nj = nearest_indices(cloud, fi, fj)
    tol = 0.5 * d1
    ok = (np.abs(nj - fj) * d <= tol) & (np.abs(ni - fi) * d <= tol)
    return ni, nj, ok.all(axis=1)


def _node_coords(cloud: DemCloud, ni: np.ndarray, nj: np.ndarray) -> np.ndarray:
    return np.stack([cloud.node_x(nj), cloud.node_y(ni), cloud.heights[ni, nj]], axis=-1)


def _node_index(cloud: DemCloud, p: Point3) -> tuple[int, int]:
    j = int(round((p.x - cloud.origin[0]) / cloud.resolution))
    i = int(round((p.y - cloud.origin[1]) / cloud.resolution))
    if (
        not (0 <= i < cloud.nrows and 0 <= j < cloud.ncols)
        or abs(cloud.node_x(j) - p.x) > NODE_TOL
        or abs(cloud.node_y(i) - p.y) > NODE_TOL
    ):
        raise GridLookupError(f"center ({p.x}, {p.y}) is not a grid node")
    return i, j


def project_pattern(cloud: DemCloud, T: PointPattern, center: Point3, theta: float, d1: float = 1.0) -> Projection:
    """Rotate ``T``'s offsets by ``theta`` about ``center`` and snap them to the DEM.

    ``feasible`` is False when some snapped node is more than ``d1 / 2`` away
    from its nominal position along x or y.
    """
    ci, cj = _node_index(cloud, center)
    offs = _rotated_offsets(T, theta)
    ni, nj, ok = _snap_batch(cloud, np.array([ci]), np.array([cj]), offs, d1)
    coords = _node_coords(cloud, ni[0], nj[0])
    nominal = np.column_stack([cloud.node_x(cj) + offs[:, 0], cloud.node_y(ci) + offs[:, 1]])
    return Projection(PointPattern(coords, T.arms), nominal, bool(ok[0]))


def rotated_reference(T: PointPattern, theta: float) -> np.ndarray:
    """Coordinates of ``T`` rotated about its own center (same arithmetic as the search)."""
    out = T.coords.copy()
    out[:, :2] = T.coords[0, :2] + _rotated_offsets(T, theta)
    return out


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("CROSSLOCATE_THREADS", "1") or 1)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def fit_search_params(cloud: DemCloud, T: PointPattern, guess: Point3, config: SearchConfig) -> NormalizationParams:
    """Normalization shared by the reference and every candidate."""
    if config.normalization_window == "none":
        return NormalizationParams((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), config.lam)
    if config.normalization_window == "full":
        return fit_params(cloud, config.lam)
    xy = T.coords[:, :2]
    reach = config.r + float(np.max(np.abs(xy - xy[0]), initial=0.0)) + cloud.resolution
    pts = cloud.valid_points()
    inside = (np.abs(pts[:, 0] - guess.x) <= reach) & (np.abs(pts[:, 1] - guess.y) <= reach)
    return fit_points(pts[inside], config.lam)


class _TopK:
    """The K smallest ``(value, center_order, angle_index)`` keys seen so far."""

    def __init__(self, k: int):
        self.k = k
        self._heap: list[tuple[float, int, int]] = []  # negated keys: max-heap

    def push(self, value: float, order: int, angle: int) -> None:
        item = (-value, -order, -angle)
        if len(self._heap) < self.k:
            heapq.heappush(self._heap, item)
        elif item > self._heap[0]:
            heapq.heapreplace(self._heap, item)

    def push_many(self, values: np.ndarray, orders: np.ndarray, angle: int) -> None:
        if values.size == 0:
            return
        if values.size > self.k:
            sel = np.lexsort((orders, values))[: self.k]
            values, orders = values[sel], orders[sel]
        for v, o in zip(values.tolist(), orders.tolist()):
            self.push(v, o, angle)

    def threshold(self) -> float:
        return -self._heap[0][0] if len(self._heap) == self.k else math.inf

    def merge(self, other: "_TopK") -> None:
        for item in other._heap:
            self.push(-item[0], -item[1], -item[2])

    def sorted(self) -> list[tuple[float, int, int]]:
        return sorted((-v, -o, -a) for v, o, a in self._heap)


def _w2_candidates(tn: np.ndarray, qn: np.ndarray, orders: np.ndarray, acc: _TopK, angle: int) -> None:
    n = tn.shape[0]
    lb = w2_lower_bound_batch(tn, qn)
    seq = np.argsort(lb, kind="stable")
    for start in range(0, seq.size, _W2_BATCH):
        thr = acc.threshold()
        if math.isfinite(thr) and lb[seq[start]] > (thr * thr * n) * (1 + _PRUNE_RTOL) + _PRUNE_ATOL:
            return
        chunk = seq[start : start + _W2_BATCH]
        costs = sq_cost_batch(tn, qn[chunk])
        for pos, idx in enumerate(chunk.tolist()):
            thr = acc.threshold()
            if math.isfinite(thr) and lb[idx] > (thr * thr * n) * (1 + _PRUNE_RTOL) + _PRUNE_ATOL:
                return
            total, _ = assignment_cost(costs[pos])
            acc.push(w2_value_from_cost(total, n), int(orders[idx]), angle)


class _Engine:
    def __init__(self, cloud, T, ci, cj, configs, params):
        self.cloud = cloud
        self.T = T
        self.ci = ci
        self.cj = cj
        self.configs = configs
        self.params = params
        self.geometry = configs[0]

    def run(self, angles: Sequence[int]):
        accs = [_TopK(c.top_k) for c in self.configs]
        feasible_pairs = [0] * len(self.configs)
        infeasible_pairs = [0] * len(self.configs)
        orders_all = np.arange(self.ci.size)
        for k in angles:
            theta = self.geometry.angle(k)
            offs = _rotated_offsets(self.T, theta)
            ni, nj, ok = _snap_batch(self.cloud, self.ci, self.cj, offs, self.geometry.d1)
            active = [
                idx
                for idx, c in enumerate(self.configs)
                if not (k != 0 and c.skip_angles_for_procrustes and c.measure is MeasureKind.PROCRUSTES)
            ]
            if not active:
                continue
            n_ok = int(ok.sum())
            for idx in active:
                feasible_pairs[idx] += n_ok
                infeasible_pairs[idx] += ok.size - n_ok
            if n_ok == 0:
                continue
            q = _node_coords(self.cloud, ni[ok], nj[ok])
            orders = orders_all[ok]
            tref = rotated_reference(self.T, theta)
            for idx in active:
                cfg, par = self.configs[idx], self.params[idx]
                tn = apply_array(par, tref)
                qn = apply_array(par, q)
                if cfg.measure is MeasureKind.WASSERSTEIN:
                    _w2_candidates(tn, qn, orders, accs[idx], k)
                elif cfg.measure is MeasureKind.LEAST_SQUARES:
                    accs[idx].push_many(least_squares_batch(tn, qn), orders, k)
                else:
                    accs[idx].push_many(procrustes_batch(tn, qn)[0], orders, k)
        return accs, feasible_pairs, infeasible_pairs


def match_configs(
    cloud: DemCloud, T: PointPattern, guess: Point3, configs: Sequence[SearchConfig]
) -> list[MatchResult]:
    """Run several measure/lambda settings that share one search geometry.

    All configs must agree on ``r``, ``d1`` and ``n_angles``; snapping is then
    done once per angle and reused.
    """
    if not configs:
        return []
    g = configs[0]
    for c in configs[1:]:
        if (c.r, c.d1, c.n_angles) != (g.r, g.d1, g.n_angles):
            raise ValueError("configs passed together must share r, d1 and n_angles")
    if not g.r > cloud.resolution:
        raise ValueError(f"search radius r={g.r} must exceed the DEM resolution {cloud.resolution}")
    ci, cj = candidate_indices(cloud, guess, g.r, g.d1)
    if ci.size == 0:
        raise NoCandidatesError(
            f"no DEM node within r={g.r} m and d1={g.d1} m of ({guess.x}, {guess.y}, {guess.z})"
        )
    params = [fit_search_params(cloud, T, guess, c) for c in configs]
    engine = _Engine(cloud, T, ci, cj, list(configs), params)

    threads = resolve_threads(g.threads)
    all_angles = list(range(g.n_angles))
    if threads > 1 and g.n_angles > 1:
        chunks = [all_angles[i::threads] for i in range(threads)]
        chunks = [c for c in chunks if c]
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(engine.run, chunks))
    else:
        parts = [engine.run(all_angles)]

    results = []
    for idx, cfg in enumerate(configs):
        acc = _TopK(cfg.top_k)
        feasible = infeasible = 0
        for accs, fp, ip in parts:
            acc.merge(accs[idx])
            feasible += fp[idx]
            infeasible += ip[idx]
        ranked = acc.sorted()
        if not ranked:
            raise InfeasibleError(f"all {infeasible} (center, angle) candidates violate the d1/2 snapping tolerance")
        top = []
        for value, order, k in ranked:
            top.append(Candidate(cloud.node(int(ci[order]), int(cj[order])), cfg.angle(k), k, value))
        best = top[0]
        proj = project_pattern(cloud, T, best.center, best.angle, cfg.d1)
        results.append(
            MatchResult(
                best_center=best.center,
                best_angle=best.angle,
                best_angle_index=best.angle_index,
                best_value=best.value,
                best_pattern=proj.pattern,
                measure=cfg.measure,
                lam=cfg.lam,
                params=params[idx],
                n_centers=int(ci.size),
                candidates_evaluated=feasible,
                n_infeasible=infeasible,
                top_k=top,
            )
        )
    return results


def match(cloud: DemCloud, T: PointPattern, guess: Point3, config: SearchConfig) -> MatchResult:
    """Locate ``T`` near ``guess``: the center/angle pair minimizing the configured measure.

    ``T`` keeps its own coordinates; the rotated reference is always ``T``
    turned about its own center, while ``guess`` only fixes the candidate
    window (``r`` box in the plane, ``d1`` band in height).
    """
    return match_configs(cloud, T, guess, [config])[0]
