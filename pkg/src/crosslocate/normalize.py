"""Centering, per-axis standard-deviation scaling and the z penalty."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dem import DemCloud, Point3
from .errors import DegenerateCloudError
from .pattern import PointPattern

#: Standard deviations below this are treated as a flat axis.
MIN_SIGMA = 1e-9

DEFAULT_LAMBDA_SWEEP = (1.0, 20.0, 40.0, 60.0, 80.0, 100.0, 200.0)


@dataclass(frozen=True)
class NormalizationParams:
    mu: tuple[float, float, float]
    sigma: tuple[float, float, float]
    lam: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam!r}")
        if min(self.sigma) <= 0:
            raise ValueError(f"sigma components must be positive, got {self.sigma!r}")

    @classmethod
    def identity(cls) -> "NormalizationParams":
        return cls((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), 1.0)

    def with_lambda(self, lam: float) -> "NormalizationParams":
        return NormalizationParams(self.mu, self.sigma, lam)

    def to_dict(self) -> dict:
        return {"mu": list(self.mu), "sigma": list(self.sigma), "lambda": self.lam}

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationParams":
        return cls(tuple(map(float, data["mu"])), tuple(map(float, data["sigma"])), float(data["lambda"]))


def fit_points(points: np.ndarray, lam: float = 1.0) -> NormalizationParams:
    """Mean and population standard deviation of an ``(N, 3)`` array."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3 or points.shape[0] < 2:
        raise DegenerateCloudError("need at least two points to fit normalization statistics")
    mu = points.mean(axis=0)
    # second pass removes the rounding error of the first mean
    mu = mu + (points - mu).mean(axis=0)
    sigma = np.sqrt(((points - mu) ** 2).mean(axis=0))
    if np.any(sigma < MIN_SIGMA):
        axis = "xyz"[int(np.argmin(sigma))]
        raise DegenerateCloudError(f"zero spread along {axis} (sigma={sigma.min():.3g})")
    return NormalizationParams(tuple(map(float, mu)), tuple(map(float, sigma)), lam)


def fit_params(cloud: DemCloud, lam: float = 1.0) -> NormalizationParams:
    return fit_points(cloud.valid_points(), lam)


def apply_array(params: NormalizationParams, coords: np.ndarray) -> np.ndarray:
    out = (np.asarray(coords, dtype=np.float64) - np.asarray(params.mu)) / np.asarray(params.sigma)
    out[..., 2] *= params.lam
    return out


def invert_array(params: NormalizationParams, coords: np.ndarray) -> np.ndarray:
    out = np.array(coords, dtype=np.float64)
    out[..., 2] /= params.lam
    return out * np.asarray(params.sigma) + np.asarray(params.mu)


def apply(params: NormalizationParams, p: Point3) -> Point3:
    return Point3(*map(float, apply_array(params, np.array(p.as_tuple()))))


def apply_pattern(params: NormalizationParams, pattern: PointPattern) -> PointPattern:
    return pattern.replace_coords(apply_array(params, pattern.coords))


def invert_pattern(params: NormalizationParams, pattern: PointPattern) -> PointPattern:
    return pattern.replace_coords(invert_array(params, pattern.coords))
