"""Exponential time differencing for ``du/dt = -L u + N(u)`` with diagonal L.

Both model systems expose the same small interface (``rates``,
``nonlinear``, ``pack``/``unpack``, ``velocity_bound``, ``density``,
``energy_weight``), so a single driver advances either of them.

The driver also accumulates the time integrals of the dissipation rate and
of the drift work by the trapezoid rule, which turns the energy identity
``E(t) - E(0) + 2 D(t) - 2 W(t) = 0`` into a checkable residual.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .abp2d import AbpParams, Abp2dSystem, AngularState
from .errors import ConfigurationError, NumericFailure, check_finite
from .gt1d import Gt1dSystem, GtParams, GtState
from .spectral import l2_inner, l2_norm_sq, to_physical

log = logging.getLogger(__name__)

SCHEMES = ("ETD-RK2", "ETD-Euler")
CFL_RECHECK = 10
SERIES_CUTOFF = 1e-4


@dataclass
class IntegratorConfig:
    dt: float | None = None
    scheme: str = "ETD-RK2"
    max_steps: int = 10_000_000
    cfl_safety: float = 0.5
    enforce_cfl: bool = True
    dt_cap: float = 1e-2
    clip_tol: float = 1e-6

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not 0 < self.cfl_safety <= 1:
            raise ConfigurationError("cfl_safety must lie in (0, 1]")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be >= 1")


def exp_factor(rate, dt):
    """``exp(-rate dt)`` for nonnegative rates."""
    rate = np.asarray(rate, dtype=float)
    if np.any(rate < 0):
        raise ValueError("decay rates must be nonnegative")
    out = np.exp(-rate * dt)
    return float(out) if out.ndim == 0 else out


def phi1(z):
    """``(e^z - 1)/z`` with a Taylor branch near zero."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_CUTOFF
    zs = np.where(small, 1.0, z)
    exact = np.expm1(zs) / zs
    series = 1.0 + z / 2.0 + z * z / 6.0 + z ** 3 / 24.0
    return np.where(small, series, exact)


def phi2(z):
    """``(e^z - 1 - z)/z^2`` with a Taylor branch near zero."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_CUTOFF
    zs = np.where(small, 1.0, z)
    exact = (np.expm1(zs) - zs) / (zs * zs)
    series = 0.5 + z / 6.0 + z * z / 24.0 + z ** 3 / 120.0
    return np.where(small, series, exact)


class EtdStepper:
    """Precomputed exponential coefficients for one system and step size."""

    def __init__(self, rates: np.ndarray, h: float, scheme: str = "ETD-RK2"):
        self.h = float(h)
        self.scheme = scheme
        z = -rates * h
        self.E = np.exp(z)
        self.hphi1 = h * phi1(z)
        self.hphi2 = h * phi2(z)

    def step(self, u, nonlinear, N0=None):
        """Advance one step; ``N0`` may carry a cached ``N(u)``."""
        if N0 is None:
            N0 = nonlinear(u)
        ua = self.E * u + self.hphi1 * N0
        if self.scheme == "ETD-Euler":
            return ua
        return ua + self.hphi2 * (nonlinear(ua) - N0)


def make_system(state, params):
    """Build the semi-discrete system matching ``state``."""
    if isinstance(state, AngularState):
        if not isinstance(params, AbpParams):
            raise ConfigurationError("an AngularState needs AbpParams")
        if state.n != params.n or state.grid != params.grid:
            raise ConfigurationError("state and parameters disagree on n or grid")
        return Abp2dSystem(params)
    if isinstance(state, GtState):
        if not isinstance(params, GtParams):
            raise ConfigurationError("a GtState needs GtParams")
        if state.grid != params.grid:
            raise ConfigurationError("state and parameters disagree on grid")
        return Gt1dSystem(params)
    raise ConfigurationError(f"unsupported state type {type(state).__name__}")


def stability_bound(system, u_hat, safety: float) -> float:
    """Largest step allowed by the advective CFL-type condition."""
    Pe = system.params.Pe
    vmax = system.velocity_bound(u_hat)
    if Pe == 0 or vmax == 0:
        return math.inf
    return safety * system.grid.dx / (Pe * vmax)


def advance(state, params, config: IntegratorConfig | None = None, dt: float | None = None):
    """Single step of size ``dt`` (or ``config.dt``) from ``state``."""
    config = config or IntegratorConfig()
    h = dt if dt is not None else config.dt
    if h is None or not h > 0:
        raise ConfigurationError("advance needs a positive dt")
    system = make_system(state, params)
    u = system.pack(state)
    check_finite(to_physical(u, system.grid), "state", step=0)
    if config.enforce_cfl:
        bound = stability_bound(system, u, config.cfl_safety)
        if h > bound:
            warnings.warn(f"dt={h:g} exceeds stability bound {bound:g}; clamping", RuntimeWarning)
            h = bound
    stepper = EtdStepper(system.rates, h, config.scheme)
    try:
        u1 = stepper.step(u, system.nonlinear)
    except NumericFailure as exc:
        exc.step = 1
        raise
    _check_step(u1, system, 1)
    return system.unpack(u1, state.time + h)


def _check_step(u, system, step):
    if not np.all(np.isfinite(u)):
        check_finite(to_physical(u, system.grid), "state", step=step)
        raise NumericFailure(f"non-finite spectrum at step {step}", step=step)


@dataclass
class EnergyLedger:
    """Running trapezoid integrals of dissipation and drift work."""

    energy0: float = 0.0
    dissipation: float = 0.0
    work: float = 0.0
    clip_activations: int = 0
    _last_d: float = field(default=0.0, repr=False)
    _last_w: float = field(default=0.0, repr=False)

    def rates(self, system, u, N):
        w = system.energy_weight
        d = w * float(np.sum(system.rates * l2_norm_sq_stack(u, system)))
        work = w * float(np.sum(l2_inner(u, N, system.grid)))
        return d, work

    def start(self, system, u, N):
        self.energy0 = energy(system, u)
        self._last_d, self._last_w = self.rates(system, u, N)

    def add(self, system, u, N, h):
        d, w = self.rates(system, u, N)
        self.dissipation += 0.5 * h * (self._last_d + d)
        self.work += 0.5 * h * (self._last_w + w)
        self._last_d, self._last_w = d, w

    def residual(self, e_now: float) -> float:
        return abs(e_now - self.energy0 + 2.0 * self.dissipation - 2.0 * self.work)


def l2_norm_sq_stack(u, system):
    """Per-mode ``|u|^2`` weighted so that summing gives L^2 norms."""
    g = system.grid
    w = g.spectral_weights() * g.volume
    return (u.real ** 2 + u.imag ** 2) * w


def energy(system, u) -> float:
    return system.energy_weight * float(np.sum(l2_norm_sq(u, system.grid)))


def count_clips(rho_values, tol: float) -> int:
    """Collocation nodes where the cutoff changes the mobility by more than ``tol``."""
    return int(np.count_nonzero((rho_values < -tol) | (rho_values > 1.0 + tol)))


@dataclass
class RunResult:
    state: object
    records: list
    ledger: EnergyLedger
    steps: int
    dt: float


def integrate(state, params, T: float, config: IntegratorConfig | None = None,
              observers: Sequence[Callable] = (), cadence: float | None = None,
              record: bool = True) -> RunResult:
    """Advance ``state`` to time ``state.time + T``.

    Observers are called as ``obs(state, rec)`` at ``t0 + j*cadence`` for
    ``j = 0..floor(T/cadence)``; ``rec`` is the DiagnosticsRecord when
    ``record`` is true.  The step is chosen so that observation times are hit
    exactly, and is halved if the stability bound drops below it.
    """
    from .diagnostics import make_record

    config = config or IntegratorConfig()
    if not T >= 0:
        raise ConfigurationError(f"T must be >= 0, got {T}")
    system = make_system(state, params)
    u = system.pack(state).copy()
    check_finite(to_physical(u, system.grid), "state", step=0)
    t0 = state.time
    if cadence is None or cadence <= 0:
        cadence = T if T > 0 else 1.0
    n_obs = int(math.floor(T / cadence + 1e-9))

    h = config.dt if config.dt is not None else config.dt_cap
    if config.enforce_cfl:
        h = min(h, stability_bound(system, u, config.cfl_safety))
    # align to the observation cadence (or to T when it has no full cadence)
    span = cadence if n_obs > 0 else T
    if span > 0:
        h = span / max(1, math.ceil(span / h - 1e-9))

    ledger = EnergyLedger()
    N = system.nonlinear(u)
    ledger.start(system, u, N)
    records = []

    def observe(u_now, t_now):
        st = system.unpack(u_now, t_now)
        rec = make_record(st, params, ledger, system, u_now) if record else None
        if rec is not None:
            records.append(rec)
        for obs in observers:
            obs(st, rec)

    observe(u, t0)
    step = 0
    t = t0
    stepper = EtdStepper(system.rates, h, config.scheme)
    targets = [t0 + j * cadence for j in range(1, n_obs + 1)]
    if T > 0 and (not targets or targets[-1] < t0 + T - 1e-12 * max(1.0, T)):
        targets.append(None)  # final time, not an observation
    for target in targets:
        t_end = t0 + T if target is None else target
        while t_end - t > 1e-12 * max(1.0, abs(t_end)):
            hh = min(stepper.h, t_end - t)
            if config.enforce_cfl and step % CFL_RECHECK == 0 and step > 0:
                bound = stability_bound(system, u, config.cfl_safety)
                if stepper.h > bound:
                    new_h = stepper.h
                    while new_h > bound:
                        new_h *= 0.5
                    warnings.warn(f"step {step}: dt={stepper.h:g} exceeds stability bound "
                                  f"{bound:g}; reducing to {new_h:g}", RuntimeWarning)
                    stepper = EtdStepper(system.rates, new_h, config.scheme)
                    hh = min(new_h, t_end - t)
            cur = stepper if abs(hh - stepper.h) <= 1e-14 * stepper.h else EtdStepper(system.rates, hh, config.scheme)
            step += 1
            if step > config.max_steps:
                raise ConfigurationError(f"max_steps={config.max_steps} exceeded at t={t:g}")
            try:
                u = cur.step(u, system.nonlinear, N)
                _check_step(u, system, step)
                N = system.nonlinear(u)
            except NumericFailure as exc:
                exc.step = step
                raise
            t += hh
            if abs(t - t_end) <= 1e-12 * max(1.0, abs(t_end)):
                t = t_end
            ledger.add(system, u, N, hh)
            ledger.clip_activations += count_clips(system.density(u), config.clip_tol)
        if target is not None:
            observe(u, t)
    log.debug("integrated %d steps with dt=%g", step, stepper.h)
    return RunResult(system.unpack(u, t0 + T if T > 0 else t0), records, ledger, step, stepper.h)
