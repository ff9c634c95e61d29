import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdabp.abp2d import AbpParams, AngularState, mode_indices
from crowdabp.errors import ConfigurationError, NumericFailure
from crowdabp.integrate import (
    EtdStepper,
    IntegratorConfig,
    advance,
    exp_factor,
    integrate,
    phi1,
    phi2,
)
from crowdabp.spectral import SpatialGrid


@pytest.mark.parametrize("rate, dt, expected", [(0.0, 0.3, 1.0), (2.0, 0.5, math.exp(-1)), (16.5, 0.1, math.exp(-1.65))])
def test_exp_factor_examples(rate, dt, expected):
    assert exp_factor(rate, dt) == pytest.approx(expected, rel=1e-15)


def test_exp_factor_rejects_negative():
    with pytest.raises(ValueError):
        exp_factor(-1.0, 0.1)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 5))
def test_phi_functions_match_mpmath(z):
    import mpmath as mp

    # confluent hypergeometric forms avoid the cancellation of the difference quotients
    e1 = mp.hyp1f1(1, 2, z)
    e2 = mp.hyp1f1(1, 3, z) / 2
    assert float(phi1(z)) == pytest.approx(float(e1), rel=1e-12)
    assert float(phi2(z)) == pytest.approx(float(e2), rel=1e-11)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        IntegratorConfig(dt=0)
    with pytest.raises(ConfigurationError):
        IntegratorConfig(scheme="RK4")
    with pytest.raises(ConfigurationError):
        IntegratorConfig(cfl_safety=1.5)


def test_stepper_without_nonlinearity_is_exact():
    rates = np.array([0.0, 1.0, 7.5])
    u = np.array([1.0, 2.0, -3.0], dtype=complex)
    out = EtdStepper(rates, 0.2).step(u, lambda v: np.zeros_like(v))
    assert np.allclose(out, u * np.exp(-rates * 0.2), rtol=0, atol=1e-15)


def test_single_mode_advance():
    g = SpatialGrid(16, 16)
    X, _ = g.mesh()
    a = np.zeros((3,) + g.shape)
    a[1] = np.cos(X)
    s = AngularState.from_values(g, a, np.zeros((2,) + g.shape))
    out = advance(s, AbpParams(0.0, 1.0, 2, g), dt=0.1)
    assert np.max(np.abs(out.a[1] - math.exp(-0.2) * np.cos(X))) < 1e-14
    assert out.time == pytest.approx(0.1)


def test_linear_closed_form_all_modes(make_state):
    g = SpatialGrid(16, 16)
    n, De, T = 4, 0.7, 0.3
    s = make_state(g, n, seed=3, kmax=7, amp=0.1)
    res = integrate(s, AbpParams(0.0, De, n, g), T)
    rates = De * g.wavenumber_squared()[None] + mode_indices(n).reshape(-1, 1, 1) ** 2
    want = s.hat * np.exp(-rates * T)
    mask = np.abs(want) > 1e-12
    assert mask.sum() > 100
    rel = np.abs(res.state.hat[mask] - want[mask]) / np.abs(want[mask])
    assert rel.max() < 1e-10


def test_zero_horizon_is_identity(make_state):
    g = SpatialGrid(8, 8)
    s = make_state(g, 2)
    res = integrate(s, AbpParams(1.0, 0.5, 2, g), 0.0)
    assert np.array_equal(res.state.hat, s.hat)
    assert res.steps == 0 and len(res.records) == 1


@pytest.mark.parametrize("T, cadence", [(1.0, 0.1), (0.35, 0.1), (0.5, 0.5), (0.2, 0.3)])
def test_observer_count(make_state, T, cadence):
    g = SpatialGrid(8, 8)
    s = make_state(g, 2)
    times = []
    integrate(s, AbpParams(0.5, 0.5, 2, g), T, observers=[lambda st, rec: times.append(st.time)],
              cadence=cadence, record=False)
    assert len(times) == math.floor(T / cadence) + 1
    assert np.allclose(times, cadence * np.arange(len(times)), atol=1e-12)


def test_final_time_reached_off_cadence(make_state):
    g = SpatialGrid(8, 8)
    s = make_state(g, 2)
    res = integrate(s, AbpParams(0.5, 0.5, 2, g), 0.35, cadence=0.1)
    assert res.state.time == pytest.approx(0.35, abs=1e-12)


def test_mass_after_100_steps(make_state):
    g = SpatialGrid(16, 16)
    s = make_state(g, 3, seed=8, amp=0.1)
    m0 = s.mass()
    res = integrate(s, AbpParams(1.0, 0.5, 3, g), 0.1, IntegratorConfig(dt=1e-3))
    assert res.steps == 100
    assert abs(res.state.mass() - m0) / m0 <= 1e-11


def test_max_steps_guard(make_state):
    g = SpatialGrid(8, 8)
    with pytest.raises(ConfigurationError):
        integrate(make_state(g, 2), AbpParams(0.5, 0.5, 2, g), 1.0, IntegratorConfig(dt=0.01, max_steps=5))


def test_nan_reports_step(make_state, monkeypatch):
    from crowdabp import abp2d

    g = SpatialGrid(8, 8)
    s = make_state(g, 2)
    calls = {"n": 0}
    original = abp2d.Abp2dSystem.nonlinear

    def poisoned(self, u):
        calls["n"] += 1
        out = original(self, u)
        if calls["n"] > 6:
            out = out * np.nan
        return out

    monkeypatch.setattr(abp2d.Abp2dSystem, "nonlinear", poisoned)
    with pytest.raises(NumericFailure) as info:
        integrate(s, AbpParams(0.5, 0.5, 2, g), 1.0, IntegratorConfig(dt=0.01))
    assert info.value.step is not None and info.value.step >= 1


def test_large_dt_is_clamped_with_warning(make_state):
    g = SpatialGrid(16, 16)
    s = make_state(g, 2, amp=0.2)
    with pytest.warns(RuntimeWarning):
        advance(s, AbpParams(50.0, 0.5, 2, g), dt=0.5)


def test_second_order_self_convergence(make_state):
    g = SpatialGrid(16, 16)
    s = make_state(g, 2, seed=11, amp=0.1)
    params = AbpParams(1.0, 0.5, 2, g)
    T = 0.1

    def run(dt):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            return integrate(s, params, T, IntegratorConfig(dt=dt), record=False).state.hat

    u1, u2, u3 = run(0.01), run(0.005), run(0.0025)
    order = math.log2(np.linalg.norm(u1 - u2) / np.linalg.norm(u2 - u3))
    assert 1.8 <= order <= 2.2


def test_runs_are_bit_reproducible(make_state):
    g = SpatialGrid(16, 16)
    s = make_state(g, 3, seed=12)
    params = AbpParams(1.0, 0.5, 3, g)
    r1 = integrate(s, params, 0.05, cadence=0.01)
    r2 = integrate(s, params, 0.05, cadence=0.01)
    assert r1.records == r2.records
    assert np.array_equal(r1.state.hat, r2.state.hat)


def test_euler_scheme_is_first_order(make_state):
    g = SpatialGrid(16, 16)
    s = make_state(g, 2, seed=11, amp=0.1)
    params = AbpParams(1.0, 0.5, 2, g)

    def run(dt):
        return integrate(s, params, 0.1, IntegratorConfig(dt=dt, scheme="ETD-Euler"), record=False).state.hat

    u1, u2, u3 = run(0.01), run(0.005), run(0.0025)
    order = math.log2(np.linalg.norm(u1 - u2) / np.linalg.norm(u2 - u3))
    assert 0.8 <= order <= 1.2
