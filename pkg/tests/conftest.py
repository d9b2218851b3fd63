import numpy as np
import pytest

from crosslocate.dem import DemCloud

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0][2:])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")


def make_cloud(heights, origin=(0.0, 0.0), resolution=1.0, valid=None):
    return DemCloud(origin=origin, resolution=resolution, heights=np.asarray(heights, dtype=float), valid=valid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def smooth_cloud():
    """64x64 smooth random surface with a non-zero origin."""
    y, x = np.mgrid[0:64, 0:64].astype(float)
    z = 3 * np.sin(x / 7.0) + 2 * np.cos(y / 5.0) + 0.05 * x * y / 10
    return make_cloud(z, origin=(1000.0, 2000.0))
