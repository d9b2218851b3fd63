import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crosslocate.derivative import ArmDerivative, arc_derivative, exact_indices, extract_target, save_derivative_csv
from crosslocate.errors import DegenerateGeometryError
from crosslocate.pattern import CrossSpec, PointPattern, build_cross
from conftest import make_cloud

ENDS = {0, 100, 200, 300, 400}


def surface(n, fn, origin=(0.0, 0.0)):
    y, x = np.mgrid[0:n, 0:n].astype(float)
    return make_cloud(fn(x + origin[0], y + origin[1]), origin=origin)


def oracle_derivative(coords):
    """Straight transcription of the two-branch formula for the 401-point cross."""
    out = {}
    for k in range(1, 400):
        if k in (100, 200, 300):
            continue
        lo = 0 if k in (1, 101, 201, 301) else k - 1
        hi = k + 1
        dz = coords[hi][2] - coords[lo][2]
        ds = math.sqrt((coords[hi][1] - coords[lo][1]) ** 2 + (coords[hi][0] - coords[lo][0]) ** 2)
        out[k] = dz / ds
    return out


def random_cross(seed, alpha=None):
    g = np.random.default_rng(seed)
    a, b = g.uniform(5, 20, size=2)
    cloud = surface(260, lambda x, y: 4 * np.sin(x / a) * np.cos(y / b) + g.normal() * 0.01 * x)
    alpha = g.uniform(0, 360) if alpha is None else alpha
    return build_cross(cloud, CrossSpec(center=(130.0, 130.0), first_arm_angle=alpha))


class TestArcDerivative:
    def test_flat(self):
        cross = build_cross(make_cloud(np.full((230, 230), 7.0)), CrossSpec(center=(115.0, 115.0)))
        d = arc_derivative(cross)
        assert all(v == 0.0 for v in d.values.values())

    def test_plane_z_equals_x(self):
        cloud = surface(230, lambda x, y: x)
        cross = build_cross(cloud, CrossSpec(center=(115.0, 115.0), first_arm_angle=270.0))
        d = arc_derivative(cross)
        assert [d.values[k] for k in range(1, 100)] == [1.0] * 99

    def test_domain(self):
        d = arc_derivative(random_cross(0))
        assert set(d.values) == set(range(1, 400)) - {100, 200, 300}
        assert d.endpoints == (0, 100, 200, 300, 400)
        assert d.groups == tuple(tuple(range(a * 100 + 1, a * 100 + 100)) for a in range(4))

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_two_branch_oracle(self, seed):
        cross = random_cross(seed)
        got = arc_derivative(cross).values
        want = oracle_derivative(cross.coords.tolist())
        assert got.keys() == want.keys()
        for k in want:
            assert got[k] == pytest.approx(want[k], rel=1e-12, abs=1e-15)

    def test_coincident_points(self):
        # spacing well below half a cell: consecutive points snap to the same node
        cloud = surface(40, lambda x, y: x)
        cross = build_cross(cloud, CrossSpec(center=(20.0, 20.0), arm_length_points=10, spacing=0.2))
        with pytest.raises(DegenerateGeometryError) as exc:
            arc_derivative(cross)
        assert exc.value.index == 1 or exc.value.index > 1

    def test_needs_arms(self):
        with pytest.raises(ValueError):
            arc_derivative(PointPattern(np.zeros((3, 3))))

    def test_csv(self, tmp_path):
        d = arc_derivative(random_cross(1))
        save_derivative_csv(d, tmp_path / "d.csv")
        lines = (tmp_path / "d.csv").read_text().splitlines()
        assert lines[0] == "index,dz_ds"
        assert len(lines) == 1 + 396
        k, v = lines[5].split(",")
        assert float(v) == d.values[int(k)]


def synthetic_derivative(values):
    groups = tuple(tuple(range(a * 100 + 1, a * 100 + 100)) for a in range(4))
    return ArmDerivative(values=values, groups=groups, endpoints=(0, 100, 200, 300, 400))


class TestExactIndices:
    def test_monotone(self):
        d = synthetic_derivative({k: float(k) for g in range(4) for k in range(g * 100 + 1, g * 100 + 100)})
        got = exact_indices(d)
        for a in range(4):
            assert set(range(a * 100 + 91, a * 100 + 100)) <= set(got)
        assert len(got) == 41

    def test_all_equal(self):
        d = synthetic_derivative({k: 0.5 for g in range(4) for k in range(g * 100 + 1, g * 100 + 100)})
        got = exact_indices(d)
        want = sorted(ENDS | {a * 100 + k for a in range(4) for k in range(1, 10)})
        assert got == want

    def test_signed_versus_abs(self):
        vals = {k: 0.0 for g in range(4) for k in range(g * 100 + 1, g * 100 + 100)}
        for k in range(50, 59):
            vals[k] = -5.0
        assert not set(range(50, 59)) & set(exact_indices(synthetic_derivative(vals)))
        assert set(range(50, 59)) <= set(exact_indices(synthetic_derivative(vals), use_abs=True))

    @pytest.mark.parametrize("seed", range(6))
    def test_sort_oracle(self, seed):
        d = arc_derivative(random_cross(seed))
        got = exact_indices(d)
        want = set(ENDS)
        for a in range(4):
            group = [a * 100 + k for k in range(1, 100)]
            ranked = sorted(group, key=lambda k: (-d.values[k], k))
            want |= set(ranked[:9])
        assert got == sorted(want)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.floats(0, 360, allow_nan=False), st.booleans())
    def test_always_41_with_endpoints(self, seed, alpha, use_abs):
        got = exact_indices(arc_derivative(random_cross(seed, alpha)), use_abs=use_abs)
        assert len(got) == 41 == len(set(got))
        assert ENDS <= set(got)
        for a in range(4):
            inner = [k for k in got if a * 100 < k < a * 100 + 100]
            assert len(inner) == 9


class TestExtractTarget:
    def test_full_selection(self):
        cross = random_cross(2)
        t = extract_target(cross, range(401))
        assert np.array_equal(t.coords, cross.coords)
        assert t.arms == cross.arms

    def test_center_only(self):
        cross = random_cross(2)
        t = extract_target(cross, [0])
        assert len(t) == 1 and t.center == cross.center and t.arms is None

    def test_cardinality_and_order(self):
        cross = random_cross(3)
        idx = exact_indices(arc_derivative(cross))
        t = extract_target(cross, idx)
        assert len(t) == len(idx)
        assert np.array_equal(t.coords, cross.coords[idx])
        assert [len(a) for a in t.arms] == [10, 10, 10, 10]

    @pytest.mark.parametrize("bad", [[0, 401], [1, 2], [0, 5, 5], [0, 7, 3], []])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            extract_target(random_cross(0), bad)
