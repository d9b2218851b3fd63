"""Synthetic localization experiments.

A trial draws a random cross on the terrain, reduces it to the 41-point target,
shifts the target horizontally by a random vector and asks the matcher to find
it again from the shifted position.  Errors are horizontal Euclidean distances
between the true cross center and the recovered one.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dem import DemCloud, Point3, load_dem
from .derivative import DEFAULT_SELECT, arc_derivative, exact_indices, extract_target
from .errors import CrossLocateError, SpecError
from .measures import MeasureKind
from .normalize import DEFAULT_LAMBDA_SWEEP
from .pattern import CrossSpec, PointPattern, build_cross, translate_xy
from .search import SearchConfig, match_configs, resolve_threads

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Terrain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Roughness:
    """Generator parameters: Gaussian bumps, a polynomial trend and white noise.

    ``plane`` is ``(a, b)`` for ``a*x + b*y``; ``curvature`` is
    ``(cxx, cxy, cyy)`` for a quadratic about the grid middle.  Coordinates are
    measured from the grid origin.
    """

    n_bumps: int = 120
    amplitude: float = 6.0
    min_width: float = 6.0
    max_width: float = 30.0
    plane: tuple[float, float] = (0.0, 0.0)
    curvature: tuple[float, float, float] = (0.0, 0.0, 0.0)
    noise: float = 0.0

    def is_flat(self) -> bool:
        bumps = self.n_bumps > 0 and self.amplitude != 0
        return not bumps and not any(self.plane) and not any(self.curvature) and self.noise == 0


def synth_terrain(
    seed: int,
    nrows: int,
    ncols: int,
    resolution: float = 1.0,
    roughness: Roughness | None = None,
    origin: tuple[float, float] = (0.0, 0.0),
) -> DemCloud:
    """Deterministic synthetic DEM.

    Bump heights are uniform in ``[-amplitude, amplitude]``, widths (Gaussian
    sigma, meters) uniform in ``[min_width, max_width]`` and centers uniform
    over the grid; all draws come from ``numpy.random.default_rng(seed)``.
    """
    if nrows < 64 or ncols < 64:
        raise ValueError("synthetic terrain needs at least 64 rows and 64 columns")
    rough = roughness or Roughness()
    if rough.is_flat():
        warnings.warn("flat synthetic terrain: normalization will fail on it", stacklevel=2)
    rng = np.random.default_rng(seed)
    x = np.arange(ncols) * resolution
    y = np.arange(nrows) * resolution
    z = np.zeros((nrows, ncols))
    width_x, width_y = x[-1], y[-1]
    for _ in range(rough.n_bumps):
        cx = rng.uniform(0.0, width_x)
        cy = rng.uniform(0.0, width_y)
        amp = rng.uniform(-rough.amplitude, rough.amplitude)
        s = rng.uniform(rough.min_width, rough.max_width)
        gx = np.exp(-((x - cx) ** 2) / (2 * s * s))
        gy = np.exp(-((y - cy) ** 2) / (2 * s * s))
        z += amp * np.outer(gy, gx)
    a, b = rough.plane
    z += a * x[None, :] + b * y[:, None]
    cxx, cxy, cyy = rough.curvature
    if cxx or cxy or cyy:
        xm = x - width_x / 2
        ym = y - width_y / 2
        z += cxx * xm[None, :] ** 2 + cxy * np.outer(ym, xm) + cyy * ym[:, None] ** 2
    if rough.noise:
        z += rng.normal(0.0, rough.noise, size=z.shape)
    return DemCloud(origin=origin, resolution=resolution, heights=z)


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticTerrain:
    seed: int = 0
    nrows: int = 512
    ncols: int = 512
    resolution: float = 1.0
    roughness: Roughness = field(default_factory=Roughness)


@dataclass(frozen=True)
class ExperimentSpec:
    terrain: SyntheticTerrain | str = field(default_factory=SyntheticTerrain)
    n_trials: int = 8
    perturbation_range: float = 400.0
    lambda_sweep: tuple[float, ...] = DEFAULT_LAMBDA_SWEEP
    measures: tuple[MeasureKind, ...] = (MeasureKind.WASSERSTEIN, MeasureKind.LEAST_SQUARES, MeasureKind.PROCRUSTES)
    rng_seed: int = 0
    include_raw: bool = True
    pc_lambda: float = 1.0
    r: float = 450.0
    d1: float = 1.0
    n_angles: int = 360
    normalization_window: str = "full"
    arm_length_points: int = 100
    spacing: float = 1.0
    n_arms: int = 4
    n_select: int = DEFAULT_SELECT
    abs_slope: bool = False
    svg: bool = False

    def __post_init__(self):
        object.__setattr__(self, "measures", tuple(MeasureKind.parse(m) for m in self.measures))
        object.__setattr__(self, "lambda_sweep", tuple(float(v) for v in self.lambda_sweep))
        self.validate()

    def validate(self) -> None:
        if not self.lambda_sweep:
            raise SpecError("must list at least one value", "lambda_sweep")
        if any(not lam > 0 for lam in self.lambda_sweep):
            raise SpecError("values must be positive", "lambda_sweep")
        if not self.measures:
            raise SpecError("must list at least one measure", "measures")
        if self.n_trials < 1:
            raise SpecError("must be at least 1", "n_trials")
        if self.perturbation_range < 0:
            raise SpecError("must be non-negative", "perturbation_range")
        if MeasureKind.PROCRUSTES in self.measures and self.pc_lambda not in self.lambda_sweep:
            raise SpecError("must be one of the lambda_sweep values", "pc_lambda")
        if not 0 <= self.rng_seed < 2**64:
            raise SpecError("must be a 64-bit unsigned integer", "rng_seed")
        for name in ("r", "d1", "spacing"):
            if not getattr(self, name) > 0:
                raise SpecError("must be positive", name)
        for name in ("n_angles", "arm_length_points", "n_arms", "n_select"):
            if getattr(self, name) < 1:
                raise SpecError("must be at least 1", name)
        if self.arm_length_points < 2:
            raise SpecError("arms need at least two points", "arm_length_points")
        if self.normalization_window not in ("full", "box"):
            raise SpecError("must be 'full' or 'box'", "normalization_window")

    def search_configs(self) -> list[tuple[str, SearchConfig]]:
        """``(column label, config)`` for every evaluated setting, in table order."""
        geo = dict(r=self.r, d1=self.d1, n_angles=self.n_angles, top_k=1)
        out = []
        if self.include_raw:
            out.append(("W_1", SearchConfig(measure=MeasureKind.WASSERSTEIN, lam=1.0, normalization_window="none", **geo)))
        for m in self.measures:
            for lam in self.lambda_sweep:
                label = column_label(m, lam, self.pc_lambda)
                out.append((label, SearchConfig(measure=m, lam=lam, normalization_window=self.normalization_window, **geo)))
        return out

    def summary_columns(self) -> list[str]:
        cols = ["W_1"] if self.include_raw else []
        for m in self.measures:
            if m is MeasureKind.PROCRUSTES:
                cols.append("PC")
            else:
                cols.extend(column_label(m, lam, self.pc_lambda) for lam in self.lambda_sweep)
        return cols

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentSpec":
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        search = data.pop("search", {})
        if not isinstance(search, dict):
            raise SpecError("must be a table", "search")
        data.update(search)
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown field(s) {sorted(unknown)}", sorted(unknown)[0])
        if "terrain" in data:
            data["terrain"] = _parse_terrain(data["terrain"], base_dir)
        for key in ("lambda_sweep", "measures"):
            if key in data and not isinstance(data[key], (list, tuple)):
                raise SpecError("must be a list", key)
        try:
            if "measures" in data:
                data["measures"] = tuple(MeasureKind.parse(m) for m in data["measures"])
        except ValueError as exc:
            raise SpecError(str(exc), "measures") from None
        try:
            return cls(**data)
        except SpecError:
            raise
        except (TypeError, ValueError) as exc:
            raise SpecError(str(exc)) from None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["measures"] = [m.value for m in self.measures]
        out["lambda_sweep"] = list(self.lambda_sweep)
        return out


def _parse_terrain(value, base_dir: Path | None):
    if not isinstance(value, dict):
        raise SpecError("must be a table with 'file' or 'synthetic'", "terrain")
    if ("file" in value) == ("synthetic" in value):
        raise SpecError("give exactly one of 'file' or 'synthetic'", "terrain")
    if "file" in value:
        path = Path(value["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return str(path)
    syn = dict(value["synthetic"])
    rough_keys = set(Roughness.__dataclass_fields__)
    rough = {k: syn.pop(k) for k in list(syn) if k in rough_keys}
    for k in ("plane", "curvature"):
        if k in rough:
            rough[k] = tuple(rough[k])
    try:
        return SyntheticTerrain(roughness=Roughness(**rough), **syn)
    except TypeError as exc:
        raise SpecError(str(exc), "terrain.synthetic") from None


def column_label(measure: MeasureKind, lam: float, pc_lambda: float | None = None) -> str:
    if measure is MeasureKind.WASSERSTEIN:
        return f"W~_{lam:g}"
    if measure is MeasureKind.LEAST_SQUARES:
        return f"LS~_{lam:g}"
    if pc_lambda is not None and lam == pc_lambda:
        return "PC"
    return f"PC~_{lam:g}"


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text) if path.suffix.lower() == ".toml" else json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise SpecError(f"cannot parse {path.name}: {exc}") from None
    if not isinstance(data, dict):
        raise SpecError("top level must be a table")
    return ExperimentSpec.from_dict(data, base_dir=path.parent)


def load_terrain(spec: ExperimentSpec) -> DemCloud:
    t = spec.terrain
    if isinstance(t, str):
        return load_dem(t)
    return synth_terrain(t.seed, t.nrows, t.ncols, t.resolution, t.roughness)


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------


@dataclass
class Outcome:
    label: str
    measure: MeasureKind
    lam: float
    normalized: bool
    status: str
    recovered: Point3 | None = None
    final_error: float = math.nan
    best_value: float = math.nan
    best_angle: float = math.nan
    wall_time: float = 0.0


@dataclass
class TrialRecord:
    trial_no: int
    status: str
    alpha_deg: float
    true_center: Point3 | None
    perturbed_center: Point3 | None
    offset: tuple[float, float]
    initial_error: float
    outcomes: list[Outcome] = field(default_factory=list)
    cross: PointPattern | None = None
    target_indices: list[int] = field(default_factory=list)
    solutions: dict[str, PointPattern] = field(default_factory=dict)


def trial_rng(seed: int, trial_no: int) -> np.random.Generator:
    return np.random.default_rng(seed ^ trial_no)


def run_trial(cloud: DemCloud, spec: ExperimentSpec, trial_no: int) -> TrialRecord:
    rng = trial_rng(spec.rng_seed, trial_no)
    alpha = float(rng.uniform(0.0, 360.0))
    margin = spec.arm_length_points * spec.spacing + cloud.resolution
    xmin, ymin, xmax, ymax = cloud.extent()
    if xmax - xmin <= 2 * margin or ymax - ymin <= 2 * margin:
        raise SpecError("terrain is too small for the cross arms", "terrain")
    cx = float(rng.uniform(xmin + margin, xmax - margin))
    cy = float(rng.uniform(ymin + margin, ymax - margin))
    r = spec.perturbation_range
    v = rng.uniform(-r, r, size=2) if r > 0 else np.zeros(2)
    offset = (float(v[0]), float(v[1]))
    configs = spec.search_configs()

    try:
        cross = build_cross(
            cloud,
            CrossSpec(
                center=(cx, cy),
                arm_length_points=spec.arm_length_points,
                spacing=spec.spacing,
                first_arm_angle=alpha,
                n_arms=spec.n_arms,
            ),
        )
        indices = exact_indices(arc_derivative(cross), spec.n_select, spec.abs_slope)
    except CrossLocateError as exc:
        logger.warning("trial %d: cross construction failed: %s", trial_no, exc)
        rec = TrialRecord(trial_no, f"failed: {exc}", alpha, None, None, offset, math.hypot(*offset))
        rec.outcomes = [
            Outcome(label, c.measure, c.lam, c.normalization_window != "none", "failed") for label, c in configs
        ]
        return rec

    target = extract_target(cross, indices)
    perturbed = translate_xy(target, offset)
    true_c = target.center
    guess = perturbed.center
    rec = TrialRecord(
        trial_no=trial_no,
        status="ok",
        alpha_deg=alpha,
        true_center=true_c,
        perturbed_center=guess,
        offset=offset,
        initial_error=math.hypot(guess.x - true_c.x, guess.y - true_c.y),
        cross=cross,
        target_indices=indices,
    )
    t0 = time.perf_counter()
    try:
        results = match_configs(cloud, perturbed, guess, [c for _, c in configs])
    except CrossLocateError as exc:
        rec.status = f"failed: {exc}"
        rec.outcomes = [
            Outcome(label, c.measure, c.lam, c.normalization_window != "none", "failed") for label, c in configs
        ]
        return rec
    elapsed = time.perf_counter() - t0
    for (label, cfg), res in zip(configs, results):
        c = res.best_center
        rec.outcomes.append(
            Outcome(
                label=label,
                measure=cfg.measure,
                lam=cfg.lam,
                normalized=cfg.normalization_window != "none",
                status="ok",
                recovered=c,
                final_error=math.hypot(c.x - true_c.x, c.y - true_c.y),
                best_value=res.best_value,
                best_angle=res.best_angle,
                wall_time=elapsed,
            )
        )
        rec.solutions[label] = res.best_pattern
    return rec


_WORKER_CLOUD: DemCloud | None = None


def _init_worker(cloud: DemCloud) -> None:
    global _WORKER_CLOUD
    _WORKER_CLOUD = cloud


def _worker_trial(args) -> TrialRecord:
    spec, trial_no = args
    return run_trial(_WORKER_CLOUD, spec, trial_no)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list[TrialRecord]
    trials_csv: str
    summary: str
    files: list[Path] = field(default_factory=list)


def run_experiment(
    spec: ExperimentSpec,
    out_dir=None,
    threads: int | None = 1,
    cloud: DemCloud | None = None,
) -> ExperimentResult:
    """Run ``spec.n_trials`` trials; write artifacts when ``out_dir`` is given.

    Trials run in worker processes when ``threads > 1``; every trial seeds its
    own generator, so the outputs do not depend on scheduling.
    """
    if cloud is None:
        cloud = load_terrain(spec)
    n_workers = min(resolve_threads(threads), spec.n_trials)
    trials = range(spec.n_trials)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers, initializer=_init_worker, initargs=(cloud,)) as pool:
            records = list(pool.map(_worker_trial, [(spec, k) for k in trials]))
    else:
        records = [run_trial(cloud, spec, k) for k in trials]

    trials_text = format_trials_csv(records)
    summary = format_summary(spec, records)
    result = ExperimentResult(spec, records, trials_text, summary)
    if out_dir is not None:
        result.files = write_outputs(result, Path(out_dir))
    return result


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

TRIAL_COLUMNS = [
    "trial",
    "status",
    "column",
    "measure",
    "lambda",
    "normalized",
    "alpha_deg",
    "true_x",
    "true_y",
    "true_z",
    "perturbed_x",
    "perturbed_y",
    "initial_error",
    "recovered_x",
    "recovered_y",
    "recovered_z",
    "final_error",
    "best_value",
    "best_theta_rad",
]


def _num(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def format_trials_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    for rec in records:
        t, p = rec.true_center, rec.perturbed_center
        for o in rec.outcomes:
            c = o.recovered
            w.writerow(
                [
                    rec.trial_no,
                    o.status,
                    o.label,
                    o.measure.value,
                    _num(o.lam),
                    int(o.normalized),
                    _num(rec.alpha_deg),
                    _num(t and t.x),
                    _num(t and t.y),
                    _num(t and t.z),
                    _num(p and p.x),
                    _num(p and p.y),
                    _num(rec.initial_error),
                    _num(c and c.x),
                    _num(c and c.y),
                    _num(c and c.z),
                    _num(o.final_error),
                    _num(o.best_value),
                    _num(o.best_angle),
                ]
            )
    return buf.getvalue()


def read_trials_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def error_table(spec: ExperimentSpec, records: list[TrialRecord]) -> dict[str, list[float]]:
    """Final errors per summary column, one entry per trial (NaN when failed)."""
    cols = spec.summary_columns()
    table: dict[str, list[float]] = {c: [] for c in cols}
    for rec in records:
        by_label = {o.label: o.final_error for o in rec.outcomes}
        for c in cols:
            table[c].append(by_label.get(c, math.nan))
    return table


def _fmt(v: float) -> str:
    return "-" if math.isnan(v) else f"{v:.2f}"


def _stat(values: list[float], fn) -> float:
    ok = [v for v in values if not math.isnan(v)]
    return fn(ok) if ok else math.nan


def _render(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(wd) for h, wd in zip(header, widths))]
    lines += ["  ".join(c.rjust(wd) for c, wd in zip(r, widths)) for r in rows]
    return "\n".join(lines)


def format_summary(spec: ExperimentSpec, records: list[TrialRecord]) -> str:
    """Two text tables: trial geometry (true/perturbed centers) and final errors."""
    geo_rows = []
    for rec in records:
        t, p = rec.true_center, rec.perturbed_center
        geo_rows.append(
            [
                str(rec.trial_no + 1),
                f"({t.x:.2f}, {t.y:.2f})" if t else "-",
                f"({p.x:.2f}, {p.y:.2f})" if p else "-",
                _fmt(rec.initial_error),
            ]
        )
    part1 = _render(["No.", "target cross center", "perturbed cross center", "euclidean distance"], geo_rows)

    table = error_table(spec, records)
    cols = list(table)
    rows = [[str(k + 1)] + [_fmt(table[c][k]) for c in cols] for k in range(len(records))]
    rows.append(["mean"] + [_fmt(_stat(table[c], statistics.fmean)) for c in cols])
    rows.append(["median"] + [_fmt(_stat(table[c], statistics.median)) for c in cols])
    part2 = _render(["No."] + cols, rows)

    notes = [
        "W_1: raw coordinates, Wasserstein, lambda=1",
        "W~_l / LS~_l: normalized coordinates, Wasserstein / least squares with z penalty l",
        f"PC: normalized coordinates, Procrustes with lambda={spec.pc_lambda:g}",
        "errors: horizontal distance in meters between true and recovered center",
    ]
    return f"Trials\n{part1}\n\nFinal center errors (m)\n{part2}\n\n" + "\n".join(notes) + "\n"


def _profile_rows(label: str, pattern: PointPattern, source_index=None):
    """``(series, arm, index, distance, x, y, z)`` rows for every arm point."""
    c = pattern.coords
    rows = [(label, 0, 0 if source_index is None else source_index[0], 0.0, *c[0])]
    for a, arm in enumerate(pattern.arms or (), start=1):
        for k in arm:
            dist = math.hypot(c[k, 0] - c[0, 0], c[k, 1] - c[0, 1])
            idx = k if source_index is None else source_index[k]
            rows.append((label, a, idx, dist, *c[k]))
    return rows


def format_profile_csv(rec: TrialRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "arm", "index", "distance_m", "x", "y", "z"])
    if rec.cross is not None:
        series = [_profile_rows("cross", rec.cross)]
        idx = rec.target_indices
        for label, pat in rec.solutions.items():
            series.append(_profile_rows(label, pat, idx))
        for rows in series:
            for s, a, k, d, x, y, z in rows:
                w.writerow([s, a, k, _num(d), _num(x), _num(y), _num(z)])
    return buf.getvalue()


_SVG_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def format_profile_svg(rec: TrialRecord, width: int = 720, height: int = 180) -> str:
    """Arm height profiles: one panel per arm, cross as a line, solutions as dots."""
    if rec.cross is None or rec.cross.arms is None:
        return '<svg xmlns="http://www.w3.org/2000/svg" width="10" height="10"/>\n'
    series = {"cross": _profile_rows("cross", rec.cross)}
    for label, pat in rec.solutions.items():
        series[label] = _profile_rows(label, pat, rec.target_indices)
    allz = [row[6] for rows in series.values() for row in rows]
    zmin, zmax = min(allz), max(allz)
    zspan = (zmax - zmin) or 1.0
    dmax = max(row[3] for row in series["cross"]) or 1.0
    n_arms = len(rec.cross.arms)
    pad = 30
    total_h = n_arms * height + 20 * (len(series) + 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{total_h}" font-size="11">']
    for a in range(1, n_arms + 1):
        top = (a - 1) * height

        def px(d, z):
            return pad + d / dmax * (width - 2 * pad), top + height - pad - (z - zmin) / zspan * (height - 2 * pad)

        out.append(f'<text x="{pad}" y="{top + 14}">arm {a}</text>')
        for n, (label, rows) in enumerate(series.items()):
            color = _SVG_COLORS[n % len(_SVG_COLORS)]
            pts = sorted((row[3], row[6]) for row in rows if row[1] == a)
            coords = [px(d, z) for d, z in pts]
            if label == "cross":
                path = " ".join(f"{x:.1f},{y:.1f}" for x, y in coords)
                out.append(f'<polyline fill="none" stroke="{color}" points="{path}"/>')
            else:
                out.extend(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2" fill="{color}"/>' for x, y in coords)
    for n, label in enumerate(series):
        y = n_arms * height + 20 * (n + 1)
        out.append(f'<text x="{pad}" y="{y}" fill="{_SVG_COLORS[n % len(_SVG_COLORS)]}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_outputs(result: ExperimentResult, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / "trials.csv"
    path.write_text(result.trials_csv, encoding="utf-8")
    written.append(path)
    path = out_dir / "summary.txt"
    path.write_text(result.summary, encoding="utf-8")
    written.append(path)
    prof = out_dir / "profiles"
    prof.mkdir(exist_ok=True)
    for rec in result.records:
        path = prof / f"{rec.trial_no}.csv"
        path.write_text(format_profile_csv(rec), encoding="utf-8")
        written.append(path)
        if result.spec.svg:
            path = prof / f"{rec.trial_no}.svg"
            path.write_text(format_profile_svg(rec), encoding="utf-8")
            written.append(path)
    timing = out_dir / "timings.txt"
    lines = ["trial,search_seconds"]
    for rec in result.records:
        secs = rec.outcomes[0].wall_time if rec.outcomes else 0.0
        lines.append(f"{rec.trial_no},{secs:.3f}")
    timing.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(timing)
    return written
