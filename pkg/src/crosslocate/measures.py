"""Similarity measures between equal-size point patterns.

Every measure has a batched kernel taking one reference array ``(n, 3)`` and a
stack of candidates ``(C, n, 3)``; the pairwise functions call the kernels with
``C = 1`` so both paths produce identical floating-point results.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .pattern import PointPattern


class MeasureKind(str, enum.Enum):
    WASSERSTEIN = "w2"
    LEAST_SQUARES = "ls"
    PROCRUSTES = "procrustes"

    @classmethod
    def parse(cls, text: "str | MeasureKind") -> "MeasureKind":
        if isinstance(text, MeasureKind):
            return text
        key = str(text).strip().lower()
        aliases = {
            "w2": cls.WASSERSTEIN,
            "w": cls.WASSERSTEIN,
            "wasserstein": cls.WASSERSTEIN,
            "ls": cls.LEAST_SQUARES,
            "l2": cls.LEAST_SQUARES,
            "least_squares": cls.LEAST_SQUARES,
            "procrustes": cls.PROCRUSTES,
            "pc": cls.PROCRUSTES,
            "p": cls.PROCRUSTES,
        }
        if key not in aliases:
            raise ValueError(f"unknown measure {text!r}; expected one of w2, ls, procrustes")
        return aliases[key]


class W2Result(NamedTuple):
    value: float
    plan: np.ndarray
    assignment_cost: float
    permutation: np.ndarray


class ProcrustesFit(NamedTuple):
    value: float
    rotation: np.ndarray
    rank: int


def _as_array(p) -> np.ndarray:
    if isinstance(p, PointPattern):
        return p.coords
    a = np.asarray(p, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) array, got shape {a.shape}")
    return a


def _check_sizes(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape:
        raise ValueError(f"pattern sizes differ: {u.shape[0]} vs {v.shape[0]}")
    if u.shape[0] < 1:
        raise ValueError("patterns must be non-empty")


# ---------------------------------------------------------------------------
# Batched kernels
# ---------------------------------------------------------------------------


def sq_cost_batch(ref: np.ndarray, cands: np.ndarray) -> np.ndarray:
    """Squared Euclidean costs ``(C, n, n)``; entry ``[c, i, j]`` is ``|ref_i - cand_cj|^2``."""
    diff = ref[None, :, None, :] - cands[:, None, :, :]
    return np.einsum("cija,cija->cij", diff, diff)


def assignment_cost(cost: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimum total cost of a perfect matching and the column assigned to each row."""
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum()), cols


def w2_value_from_cost(total: float, n: int) -> float:
    return float(np.sqrt(max(total, 0.0) / n))


def w2_lower_bound_batch(ref: np.ndarray, cands: np.ndarray) -> np.ndarray:
    """Lower bound on the assignment cost from the three sorted 1-D marginals."""
    rs = np.sort(ref, axis=0)
    cs = np.sort(cands, axis=1)
    return ((cs - rs[None]) ** 2).sum(axis=(1, 2))


def least_squares_batch(ref: np.ndarray, cands: np.ndarray) -> np.ndarray:
    diff = cands - ref[None]
    return np.sqrt((diff * diff).sum(axis=(1, 2)))


def procrustes_batch(ref: np.ndarray, cands: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Residuals after the best proper rotation, and the rotations ``(C, 3, 3)``."""
    p = ref - ref.mean(axis=0)
    q = cands - cands.mean(axis=1, keepdims=True)
    h = np.einsum("ia,cib->cab", p, q)
    u, _, vt = np.linalg.svd(h)
    d = np.where(np.linalg.det(u @ vt) < 0, -1.0, 1.0)
    u = u.copy()
    u[:, :, 2] *= d[:, None]
    rot = u @ vt
    resid = p[None] - q @ np.transpose(rot, (0, 2, 1))
    return np.sqrt((resid * resid).sum(axis=(1, 2))), rot


# ---------------------------------------------------------------------------
# Pairwise API
# ---------------------------------------------------------------------------


def wasserstein2(U, V) -> W2Result:
    """Exact W2 between uniform measures on two equal-size point sets.

    The optimal plan for equal masses is a permutation scaled by ``1/n``, found
    as a linear sum assignment on squared distances.
    """
    u, v = _as_array(U), _as_array(V)
    _check_sizes(u, v)
    n = u.shape[0]
    cost = sq_cost_batch(u, v[None])[0]
    total, perm = assignment_cost(cost)
    plan = np.zeros((n, n))
    plan[np.arange(n), perm] = 1.0 / n
    return W2Result(w2_value_from_cost(total, n), plan, total, perm)


def least_squares(U, V) -> float:
    """Root sum of squared distances between points with the same index."""
    u, v = _as_array(U), _as_array(V)
    _check_sizes(u, v)
    return float(least_squares_batch(u, v[None])[0])


def procrustes(U, V) -> ProcrustesFit:
    """Residual of ``min_R sum |u_i - R v_i|^2`` over proper rotations, after centering.

    ``rank`` is the rank of the cross-covariance; below 2 the optimal rotation
    is not unique and the returned one is just one minimizer.
    """
    u, v = _as_array(U), _as_array(V)
    _check_sizes(u, v)
    values, rot = procrustes_batch(u, v[None])
    h = (u - u.mean(axis=0)).T @ (v - v.mean(axis=0))
    return ProcrustesFit(float(values[0]), rot[0], int(np.linalg.matrix_rank(h)))


def evaluate(kind, U, V) -> float:
    kind = MeasureKind.parse(kind)
    if kind is MeasureKind.WASSERSTEIN:
        return wasserstein2(U, V).value
    if kind is MeasureKind.LEAST_SQUARES:
        return least_squares(U, V)
    return procrustes(U, V).value
