"""Locate sparse height-profile patterns in regular DEM grids."""

from .dem import (
    DemCloud,
    Point3,
    candidate_centers,
    load_ascii_grid,
    load_dem,
    load_xyz_csv,
    nearest_xy,
    save_ascii_grid,
    save_xyz_csv,
    val_z,
)
from .derivative import ArmDerivative, arc_derivative, exact_indices, extract_target
from .errors import CrossLocateError
from .measures import MeasureKind, evaluate, least_squares, procrustes, wasserstein2
from .normalize import NormalizationParams, apply, apply_pattern, fit_params
from .pattern import CrossSpec, PointPattern, build_cross, load_pattern, rotate, save_pattern, translate_xy
from .search import MatchResult, SearchConfig, match, match_configs, project_pattern

__version__ = "0.1.0"

__all__ = [
    "ArmDerivative",
    "CrossLocateError",
    "CrossSpec",
    "DemCloud",
    "MatchResult",
    "MeasureKind",
    "NormalizationParams",
    "Point3",
    "PointPattern",
    "SearchConfig",
    "apply",
    "apply_pattern",
    "arc_derivative",
    "build_cross",
    "candidate_centers",
    "evaluate",
    "exact_indices",
    "extract_target",
    "fit_params",
    "least_squares",
    "load_ascii_grid",
    "load_dem",
    "load_pattern",
    "load_xyz_csv",
    "match",
    "match_configs",
    "nearest_xy",
    "procrustes",
    "project_pattern",
    "rotate",
    "save_ascii_grid",
    "save_pattern",
    "save_xyz_csv",
    "translate_xy",
    "val_z",
    "wasserstein2",
]
