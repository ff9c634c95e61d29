import numpy as np
import pytest

from crowdabp.abp2d import AngularState
from crowdabp.spectral import SpatialGrid


def smooth_modes(grid: SpatialGrid, n: int, rng, kmax: int = 2, amp: float = 0.05, mean: float = 0.4):
    """Band-limited coefficient fields with ``rho`` near ``mean``."""
    X, Y = grid.mesh()
    fields = np.zeros((2 * n + 1,) + grid.shape)
    for m in range(2 * n + 1):
        for p in range(kmax + 1):
            for q in range(kmax + 1):
                c = rng.uniform(-1, 1, 2)
                fields[m] += amp * (c[0] * np.cos(p * X + q * Y) + c[1] * np.sin(p * X - q * Y))
    fields[0] += mean
    return fields[: n + 1], fields[n + 1:]


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


@pytest.fixture
def make_state():
    def build(grid, n, seed=0, **kw):
        a, b = smooth_modes(grid, n, np.random.default_rng(seed), **kw)
        return AngularState.from_values(grid, a, b)
    return build
