import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crosslocate.dem import Point3
from crosslocate.errors import DegenerateCloudError
from crosslocate.normalize import (
    NormalizationParams,
    apply,
    apply_array,
    apply_pattern,
    fit_params,
    fit_points,
    invert_pattern,
)
from crosslocate.pattern import PointPattern
from conftest import make_cloud


def test_two_points():
    p = fit_points(np.array([[0.0, 0, 0], [2.0, 2, 2]]))
    assert p.mu == (1.0, 1.0, 1.0) and p.sigma == (1.0, 1.0, 1.0)


def test_flat_cloud():
    with pytest.raises(DegenerateCloudError):
        fit_params(make_cloud(np.full((5, 5), 3.0)))


def test_single_point():
    with pytest.raises(DegenerateCloudError):
        fit_points(np.array([[1.0, 2, 3]]))


def test_two_pass_oracle(rng):
    pts = rng.normal([5e5, 2e5, 300], [100, 80, 20], size=(1000, 3))
    p = fit_points(pts)
    n = len(pts)
    for axis in range(3):
        col = [float(v) for v in pts[:, axis]]
        mean = 0.0
        for v in col:
            mean += v
        mean /= n
        var = 0.0
        for v in col:
            var += (v - mean) ** 2
        std = (var / n) ** 0.5
        assert p.mu[axis] == pytest.approx(mean, rel=1e-10)
        assert p.sigma[axis] == pytest.approx(std, rel=1e-10)


def test_fit_params_skips_nodata(rng):
    z = rng.normal(size=(6, 7))
    valid = rng.random(z.shape) > 0.3
    cloud = make_cloud(z, origin=(10.0, 20.0), valid=valid)
    p = fit_params(cloud, lam=3.0)
    pts = cloud.valid_points()
    assert np.allclose(p.mu, pts.mean(axis=0), rtol=1e-12)
    assert np.allclose(p.sigma, pts.std(axis=0), rtol=1e-12)
    assert p.lam == 3.0


class TestApply:
    params = NormalizationParams(mu=(10.0, -5.0, 200.0), sigma=(2.0, 4.0, 8.0), lam=1.0)

    def test_centroid(self):
        assert apply(self.params, Point3(10.0, -5.0, 200.0)).as_tuple() == (0.0, 0.0, 0.0)

    def test_unit_deviation(self):
        assert apply(self.params, Point3(12.0, -1.0, 208.0)).as_tuple() == (1.0, 1.0, 1.0)

    def test_lambda(self):
        assert apply(self.params.with_lambda(20.0), Point3(10.0, -5.0, 208.0)).as_tuple() == (0.0, 0.0, 20.0)

    def test_identity(self, rng):
        p = PointPattern(rng.normal(size=(5, 3)))
        assert np.array_equal(apply_pattern(NormalizationParams.identity(), p).coords, p.coords)

    def test_inverse(self, rng):
        p = PointPattern(rng.normal([5e5, 2e5, 300], 50, size=(41, 3)))
        prm = self.params.with_lambda(60.0)
        back = invert_pattern(prm, apply_pattern(prm, p))
        assert np.max(np.abs(back.coords - p.coords)) <= 1e-9

    @pytest.mark.parametrize("bad", [dict(sigma=(0.0, 1.0, 1.0)), dict(lam=0.0), dict(lam=-1.0)])
    def test_invalid(self, bad):
        kw = dict(mu=(0.0, 0.0, 0.0), sigma=(1.0, 1.0, 1.0), lam=1.0) | bad
        with pytest.raises(ValueError):
            NormalizationParams(**kw)

    def test_dict_round_trip(self):
        prm = self.params.with_lambda(40.0)
        assert NormalizationParams.from_dict(prm.to_dict()) == prm


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 20.0, 200.0, 0.37]))
def test_refit_property(seed, lam):
    g = np.random.default_rng(seed)
    # DEM-like ranges: planar coordinates up to 1e6 m with >= 10 m spread, heights
    # up to 3 km with >= 1 m spread.  Far beyond this, rounding mu to a double
    # alone moves the normalized mean by ulp(mu) * lam / sigma.
    mean = [g.uniform(-1e6, 1e6), g.uniform(-1e6, 1e6), g.uniform(-500, 3000)]
    spread = [g.uniform(10, 5000), g.uniform(10, 5000), g.uniform(1.0, 300)]
    pts = g.normal(mean, spread, size=(int(g.integers(2, 400)), 3))
    prm = fit_points(pts, lam)
    refit = fit_points(apply_array(prm, pts))
    assert np.allclose(refit.mu, 0.0, atol=1e-10)
    assert np.allclose(refit.sigma, (1.0, 1.0, lam), atol=1e-10 * max(1.0, lam), rtol=0)


def test_similarity_preserves_procrustes_argmin(rng):
    # isotropic sigma and lambda = 1: normalization is a similarity transform
    from crosslocate.measures import procrustes

    ref = rng.normal(size=(6, 3))
    cands = [rng.normal(size=(6, 3)) for _ in range(8)]
    prm = NormalizationParams(mu=(3.0, -2.0, 7.0), sigma=(2.5, 2.5, 2.5), lam=1.0)
    raw = [procrustes(ref, c).value for c in cands]
    norm = [procrustes(apply_array(prm, ref), apply_array(prm, c)).value for c in cands]
    assert int(np.argmin(raw)) == int(np.argmin(norm))
    assert np.allclose(np.array(norm) * 2.5, raw, rtol=1e-10)
