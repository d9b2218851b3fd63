import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crosslocate.dem import Point3, candidate_centers
from crosslocate.derivative import arc_derivative, exact_indices, extract_target
from crosslocate.errors import InfeasibleError, NoCandidatesError
from crosslocate.measures import MeasureKind
from crosslocate.pattern import CrossSpec, PointPattern, build_cross, rotate, translate_xy
from crosslocate.search import SearchConfig, match, match_configs, project_pattern, resolve_threads
from conftest import make_cloud

MEASURES = list(MeasureKind)


def bumpy(n=90, seed=0, origin=(0.0, 0.0)):
    g = np.random.default_rng(seed)
    y, x = np.mgrid[0:n, 0:n].astype(float)
    z = np.zeros_like(x)
    for _ in range(25):
        cx, cy = g.uniform(0, n, 2)
        w = g.uniform(3, 12)
        z += g.uniform(-4, 4) * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * w * w))
    return make_cloud(z, origin=origin)


@pytest.fixture(scope="module")
def scene():
    cloud = bumpy(origin=(500.0, 800.0))
    cross = build_cross(cloud, CrossSpec(center=(545.0, 845.0), arm_length_points=15, first_arm_angle=20.0))
    T = extract_target(cross, exact_indices(arc_derivative(cross), n_select=3))
    return cloud, T


class TestProjection:
    def test_zero_angle_on_grid(self, scene):
        cloud, T = scene
        c = cloud.node(30, 40)
        proj = project_pattern(cloud, T, c, 0.0)
        off = T.coords[:, :2] - T.coords[0, :2]
        assert np.array_equal(proj.pattern.coords[:, :2], off + [c.x, c.y])
        assert proj.feasible
        assert proj.pattern.coords[0].tolist() == list(c.as_tuple())

    def test_quarter_turn_axis_aligned(self):
        cloud = bumpy(40)
        T = PointPattern([[10, 10, 0], [13, 10, 0], [10, 12, 0], [8, 9, 0]])
        c = cloud.node(20, 20)
        proj = project_pattern(cloud, T, c, math.pi / 2)
        want = np.array([[20, 20], [20, 23], [18, 20], [21, 18]], dtype=float)
        assert np.array_equal(proj.pattern.coords[:, :2], want)
        assert np.array_equal(proj.pattern.coords[:, 2], cloud.heights[want[:, 1].astype(int), want[:, 0].astype(int)])

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 2 * math.pi, allow_nan=False))
    def test_snap_distance_bound(self, theta):
        cloud = bumpy(60)
        g = np.random.default_rng(int(theta * 1e6))
        T = PointPattern(np.column_stack([g.uniform(20, 40, (12, 2)), np.zeros(12)]))
        proj = project_pattern(cloud, T, cloud.node(30, 30), theta)
        dist = np.linalg.norm(proj.pattern.coords[:, :2] - proj.nominal, axis=1)
        assert np.all(dist <= 1 / math.sqrt(2) + 1e-12)
        assert proj.feasible

    def test_infeasible_with_tight_d1(self):
        cloud = bumpy(40)
        T = PointPattern([[10, 10, 0], [12.45, 10, 0]])
        proj = project_pattern(cloud, T, cloud.node(20, 20), 0.0, d1=0.5)
        assert not proj.feasible


class TestPlanted:
    @pytest.mark.parametrize("measure", MEASURES)
    @pytest.mark.parametrize("lam", [1.0, 100.0])
    def test_exact_recovery(self, scene, measure, lam):
        cloud, T = scene
        k_star = 5
        planted = rotate(T, -2 * math.pi * k_star / 12)
        cfg = SearchConfig(r=6, d1=100, n_angles=12, lam=lam, measure=measure)
        res = match(cloud, planted, T.center, cfg)
        assert res.best_center == T.center
        assert res.best_angle_index == k_star
        assert res.best_value <= 1e-9
        assert np.allclose(res.best_pattern.coords, T.coords, atol=0)

    @pytest.mark.parametrize("measure", MEASURES)
    def test_guess_only_sets_window(self, scene, measure):
        cloud, T = scene
        cfg = SearchConfig(r=8, d1=100, n_angles=8, measure=measure)
        base = match(cloud, T, T.center, cfg)
        moved = match(cloud, T, Point3(T.center.x + 3, T.center.y - 5, T.center.z), cfg)
        assert (moved.best_center, moved.best_angle_index, moved.best_value) == (
            base.best_center,
            base.best_angle_index,
            base.best_value,
        )

    def test_translated_reference_still_found_with_large_lambda(self, scene):
        cloud, T = scene
        shifted = translate_xy(T, (4.0, -3.0))
        cfg = SearchConfig(r=10, d1=100, n_angles=8, lam=200.0, measure="w2")
        res = match(cloud, shifted, shifted.center, cfg)
        assert res.best_center == T.center


class TestSoundness:
    @pytest.mark.parametrize("measure", MEASURES)
    def test_requirements_hold(self, scene, measure):
        cloud, T = scene
        guess = Point3(T.center.x + 2.3, T.center.y - 1.7, T.center.z + 0.2)
        cfg = SearchConfig(r=5, d1=0.8, n_angles=10, measure=measure, lam=20)
        res = match(cloud, T, guess, cfg)
        c = res.best_center
        assert abs(c.z - guess.z) <= 0.8
        assert max(abs(c.x - guess.x), abs(c.y - guess.y)) <= 5
        proj = project_pattern(cloud, T, c, res.best_angle, cfg.d1)
        assert np.all(np.abs(proj.pattern.coords[:, :2] - proj.nominal) <= 0.4 + 1e-12)
        assert res.best_value == min(t.value for t in res.top_k)
        assert np.array_equal(res.best_pattern.coords, proj.pattern.coords)

    def test_top_k_sorted(self, scene):
        cloud, T = scene
        res = match(cloud, T, T.center, SearchConfig(r=4, d1=100, n_angles=6, top_k=25))
        keys = [(t.value, t.center.y, t.center.x, t.angle_index) for t in res.top_k]
        assert keys == sorted(keys)
        assert len(res.top_k) == 25

    def test_counts(self, scene):
        cloud, T = scene
        res = match(cloud, T, T.center, SearchConfig(r=3, d1=100, n_angles=5))
        assert res.n_centers == 49
        assert res.candidates_evaluated + res.n_infeasible == 49 * 5


class TestMonotone:
    @pytest.mark.parametrize("measure", MEASURES)
    def test_radius(self, scene, measure):
        cloud, T = scene
        guess = Point3(T.center.x + 7, T.center.y + 4, T.center.z)
        vals = [match(cloud, T, guess, SearchConfig(r=r, d1=100, n_angles=6, measure=measure, lam=40)).best_value for r in (2, 4, 8)]
        assert vals[0] >= vals[1] >= vals[2]

    @pytest.mark.parametrize("measure", MEASURES)
    def test_angles(self, scene, measure):
        cloud, T = scene
        guess = Point3(T.center.x + 7, T.center.y + 4, T.center.z)
        # 3 | 6 | 12: each angle set contains the previous one
        vals = [match(cloud, T, guess, SearchConfig(r=4, d1=100, n_angles=n, measure=measure, lam=40)).best_value for n in (3, 6, 12)]
        assert vals[0] >= vals[1] >= vals[2]


class TestDeterminism:
    @pytest.mark.parametrize("measure", MEASURES)
    def test_threads(self, scene, measure):
        cloud, T = scene
        guess = Point3(T.center.x + 2, T.center.y + 1, T.center.z)
        runs = [
            match(cloud, T, guess, SearchConfig(r=6, d1=100, n_angles=9, measure=measure, lam=20, threads=t, top_k=15))
            for t in (1, 1, 3, 4)
        ]
        first = runs[0].to_json()
        assert all(r.to_json() == first for r in runs[1:])

    def test_equal_values_take_smallest_index(self):
        cloud = make_cloud(np.tile(np.arange(20.0) % 2, (20, 1)))
        T = PointPattern([[5.0, 5.0, 1.0], [6.0, 5.0, 0.0]])
        res = match(cloud, T, Point3(10.0, 10.0, 1.0), SearchConfig(r=4, d1=0.5, n_angles=2, measure="procrustes", normalization_window="none"))
        # every odd-column center fits exactly at both angles; the first in row-major order wins
        assert res.best_value <= 1e-12
        assert all(t.value <= 1e-12 for t in res.top_k)
        assert (res.best_center.x, res.best_center.y, res.best_angle_index) == (7.0, 6.0, 0)

    def test_configs_share_geometry(self, scene):
        cloud, T = scene
        cfgs = [SearchConfig(r=4, d1=100, n_angles=6, measure=m, lam=l) for m in MEASURES for l in (1.0, 60.0)]
        batch = match_configs(cloud, T, T.center, cfgs)
        for cfg, res in zip(cfgs, batch):
            assert res.to_json() == match(cloud, T, T.center, cfg).to_json()
        with pytest.raises(ValueError):
            match_configs(cloud, T, T.center, [cfgs[0], SearchConfig(r=5, d1=100, n_angles=6)])


class TestErrors:
    def test_no_candidates(self, scene):
        cloud, T = scene
        with pytest.raises(NoCandidatesError):
            match(cloud, T, Point3(T.center.x, T.center.y, 1e4), SearchConfig(r=5))

    def test_infeasible(self):
        cloud = bumpy(40)
        T = PointPattern([[10, 10, 0], [12.45, 10, 0]])
        with pytest.raises(InfeasibleError):
            match(cloud, T, Point3(20, 20, float(cloud.heights[20, 20])), SearchConfig(r=3, d1=0.5, n_angles=1, normalization_window="none"))

    def test_infeasible_skipped_not_fatal(self):
        cloud = bumpy(40)
        T = PointPattern([[10, 10, 0], [12.3, 10, 0]])
        res = match(cloud, T, Point3(20, 20, 0), SearchConfig(r=3, d1=100, n_angles=8))
        assert res.n_infeasible == 0
        res = match(cloud, T, Point3(20, 20, float(cloud.heights[20, 20])), SearchConfig(r=3, d1=0.7, n_angles=8))
        assert res.n_infeasible > 0 and res.candidates_evaluated > 0

    def test_radius_must_exceed_resolution(self, scene):
        cloud, T = scene
        with pytest.raises(ValueError):
            match(cloud, T, T.center, SearchConfig(r=1.0))

    @pytest.mark.parametrize("kw", [dict(n_angles=0), dict(d1=0), dict(lam=-1), dict(normalization_window="disk"), dict(top_k=0)])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            SearchConfig(**kw)


def test_skip_angles_for_procrustes(scene):
    cloud, T = scene
    res = match(cloud, T, T.center, SearchConfig(r=3, d1=100, n_angles=8, measure="procrustes", skip_angles_for_procrustes=True))
    assert res.best_angle_index == 0
    assert res.candidates_evaluated == 49


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("CROSSLOCATE_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    assert resolve_threads(0) >= 1


def test_json_report(scene):
    cloud, T = scene
    d = match(cloud, T, T.center, SearchConfig(r=3, d1=100, n_angles=4, top_k=3)).to_dict()
    assert set(d["best"]) == {"x", "y", "z", "theta_rad", "value", "measure", "lambda"}
    assert d["best"]["measure"] == "w2"
    assert len(d["top_k"]) == 3
    assert len(d["pattern"]) == len(T)


def test_candidate_window_matches_dem_helper(scene):
    cloud, T = scene
    guess = Point3(T.center.x + 0.5, T.center.y, T.center.z)
    res = match(cloud, T, guess, SearchConfig(r=3, d1=0.5, n_angles=1))
    assert res.n_centers == len(candidate_centers(cloud, guess, 3, 0.5))
