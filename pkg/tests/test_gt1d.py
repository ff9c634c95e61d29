import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdabp.errors import ConfigurationError, NumericFailure
from crowdabp.gt1d import Gt1dSystem, GtParams, GtState, gt_rhs, rho_p
from crowdabp.initial import gt_preset
from crowdabp.integrate import IntegratorConfig, integrate
from crowdabp.diagnostics import check_bounds, mass_drift
from crowdabp.spectral import SpatialGrid, to_spectral


@pytest.fixture
def grid():
    return SpatialGrid(32)


def test_params_need_1d_grid():
    with pytest.raises(ConfigurationError):
        GtParams(1.0, SpatialGrid(8, 8))
    with pytest.raises(ConfigurationError):
        GtParams(-0.1, SpatialGrid(8))


@pytest.mark.parametrize("c", [0.0, 0.25, 0.5])
def test_balanced_constant_is_stationary(grid, c):
    s = GtState.from_values(grid, np.full(32, c), np.full(32, c))
    d = gt_rhs(s, Pe=3.0)
    assert np.max(np.abs(d.fR.values)) < 1e-14
    assert np.max(np.abs(d.fL.values)) < 1e-14


def test_exchange_only(grid):
    s = GtState.from_values(grid, np.full(32, 0.4), np.zeros(32))
    d = gt_rhs(s, Pe=0.0)
    assert np.allclose(d.fR.values, -0.4, atol=1e-14)
    assert np.allclose(d.fL.values, 0.4, atol=1e-14)


def test_polarisation_rate_on_first_mode(grid):
    (x,) = grid.mesh()
    s = GtState.from_rho_p(grid, np.zeros(32), np.cos(x))
    d = gt_rhs(s, Pe=0.0)
    rho_dot, p_dot = rho_p(d)
    assert np.max(np.abs(p_dot.values + 3 * np.cos(x))) < 1e-13
    assert np.max(np.abs(rho_dot.values)) < 1e-13


def test_rho_p_examples(grid):
    r, p = rho_p(GtState.from_values(grid, np.ones(32), np.zeros(32)))
    assert np.allclose(r.values, 1) and np.allclose(p.values, 1)
    r, p = GtState.from_values(grid, np.full(32, 0.3), np.full(32, 0.3)).rho_p()
    assert np.allclose(r.values, 0.6) and np.allclose(p.values, 0, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_rho_p_roundtrip(seed):
    g = SpatialGrid(16)
    rng = np.random.default_rng(seed)
    fR, fL = rng.uniform(0, 1, (2, 16))
    r, p = rho_p(GtState.from_values(g, fR, fL))
    back = GtState.from_rho_p(g, r.values, p.values)
    assert np.max(np.abs(back.fR.values - fR)) < 1e-14
    assert np.max(np.abs(back.fL.values - fL)) < 1e-14


def test_drift_terms_match_direct_products(grid):
    """Band-limited data: the cutoff is inactive and products are alias free."""
    (x,) = grid.mesh()
    fR = 0.2 + 0.05 * np.cos(x) + 0.03 * np.sin(2 * x)
    fL = 0.25 - 0.04 * np.sin(x)
    Pe = 1.7
    d = gt_rhs(GtState.from_values(grid, fR, fL), Pe)
    M = 1 - (fR + fL)
    k = grid.derivative_wavenumbers()[0]

    def dx(v):
        return np.fft.irfft(1j * k * np.fft.rfft(v), n=32)

    def dxx(v):
        return np.fft.irfft(-(k ** 2) * np.fft.rfft(v), n=32)

    want_R = -Pe * dx(fR * M) + dxx(fR) + fL - fR
    want_L = Pe * dx(fL * M) + dxx(fL) + fR - fL
    assert np.max(np.abs(d.fR.values - want_R)) < 1e-13
    assert np.max(np.abs(d.fL.values - want_L)) < 1e-13


def test_system_nonlinear_matches_rhs(grid):
    s = gt_preset("gt-waves", grid)
    params = GtParams(1.2, grid)
    sysm = Gt1dSystem(params)
    u = sysm.pack(s)
    d = sysm.unpack(sysm.rhs_hat(u), 0.0)
    ref = gt_rhs(s, 1.2)
    assert np.max(np.abs(d.fR.values - ref.fR.values)) < 1e-13
    assert np.max(np.abs(d.fL.values - ref.fL.values)) < 1e-13


def test_nan_raises(grid):
    fR = np.full(32, 0.2)
    fR[5] = np.inf
    with pytest.raises(NumericFailure):
        gt_rhs(GtState.from_values(grid, fR, fR), 1.0)


def test_pe0_decay_rates(grid):
    (x,) = grid.mesh()
    rho = 0.5 + sum(0.05 * np.cos(q * x) for q in range(1, 5))
    p = 0.1 + sum(0.04 * np.sin(q * x) for q in range(1, 5))
    s = GtState.from_rho_p(grid, rho, p)
    T = 0.5
    res = integrate(s, GtParams(0.0, grid), T, IntegratorConfig(dt=0.01))
    r1, p1 = rho_p(res.state)
    R0, P0 = to_spectral(rho, grid), to_spectral(p, grid)
    R1, P1 = to_spectral(r1.values, grid), to_spectral(p1.values, grid)
    for q in range(5):
        if q:
            assert R1[q] == pytest.approx(R0[q] * np.exp(-q * q * T), rel=1e-8)
        assert P1[q] == pytest.approx(P0[q] * np.exp(-(q * q + 2) * T), rel=1e-8)


@pytest.mark.parametrize("name", ["gt-waves", "gt-plateau"])
def test_box_bounds_and_mass(grid, name):
    s = gt_preset(name, grid)
    res = integrate(s, GtParams(1.0, grid), 0.5, cadence=0.05)
    assert mass_drift(res.records) < 1e-12
    b = check_bounds(res.records)
    assert b.passed and b.clip_activations == 0
    assert b.rho_max <= 1 + 1e-6
