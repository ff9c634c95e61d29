"""Verification suites: each check compares a measured value with a bound.

The numbered criteria are grouped into the suites exposed on the command
line (``invariants``, ``linear-exact``, ``duhamel``, ``smoothing``, ``all``).
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate as sp_integrate

from .abp2d import AbpParams, Abp2dSystem, AngularState
from .config import RunConfig
from .diagnostics import check_bounds, check_gronwall, mass_drift, phase_space_l2
from .gt1d import GtParams, GtState
from .initial import ADMISSIBLE_PRESETS, GT_PRESETS, MollifierSpec, dual_distance, gt_preset, mollify, preset
from .integrate import IntegratorConfig, integrate
from .kernel import (
    duhamel_residual_1d,
    duhamel_residual_3d,
    phi1d,
    phi1d_l2_time_integral,
    phi1d_product,
    phi1d_series,
    phi3d,
)
from .runner import simulate
from .spectral import TWO_PI, SpatialGrid


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name},{status},{self.value!r},{self.bound}"


def _le(name, value, bound):
    return CheckResult(name, bool(value <= bound), float(value), f"<= {bound!r}")


def _ge(name, value, bound):
    return CheckResult(name, bool(value >= bound), float(value), f">= {bound!r}")


def _within(name, value, lo, hi):
    return CheckResult(name, bool(lo <= value <= hi), float(value), f"in [{lo!r}, {hi!r}]")


def _random_modes(grid, n, seed, amp=0.05, modes=3):
    """Smooth random coefficient fields (a few low Fourier modes each)."""
    rng = np.random.default_rng(seed)
    X, Y = grid.mesh()
    out = np.zeros((2 * n + 1,) + grid.shape)
    for f in out:
        for _ in range(modes):
            p, q = rng.integers(0, 4, size=2)
            f += amp * rng.standard_normal() * np.cos(p * X + q * Y + rng.uniform(0, TWO_PI))
    out[0] += 0.5
    return out


def _snapshots(state, params, T, count, dt):
    out = []
    integrate(state, params, T, IntegratorConfig(dt=dt), observers=[lambda s, r: out.append(s)],
              cadence=T / count, record=False)
    return out


# -- 1: linear exactness ------------------------------------------------------

def linear_exactness() -> list[CheckResult]:
    grid, n, T = SpatialGrid(16, 16), 4, 0.3
    params = AbpParams(0.0, 0.7, n, grid)
    vals = _random_modes(grid, n, seed=11, modes=6)
    state = AngularState.from_values(grid, vals[: n + 1], vals[n + 1:])
    start = time.perf_counter()
    final = integrate(state, params, T, IntegratorConfig(dt=0.01), record=False).state
    elapsed = time.perf_counter() - start
    exact = np.exp(-Abp2dSystem(params).rates * T) * state.hat
    mask = np.abs(exact) > 1e-12 * np.abs(exact).max()
    rel = float(np.max(np.abs(final.hat - exact)[mask] / np.abs(exact[mask])))
    return [_le("linear_exact_2d_rel", rel, 1e-10), _le("linear_exact_2d_seconds", elapsed, 5.0)]


# -- 2: mass conservation -----------------------------------------------------

def mass_conservation() -> list[CheckResult]:
    grid, n = SpatialGrid(16, 16), 4
    params = AbpParams(1.0, 0.5, n, grid)
    state = preset("von-mises-patch", grid).to_state(n)
    res = integrate(state, params, 1.0, IntegratorConfig(dt=1e-3), cadence=0.1)
    return [_ge("mass_steps", res.steps, 1000), _le("mass_drift_rel", mass_drift(res.records), 1e-11)]


# -- 3 and 4: preset runs ------------------------------------------------------

PRESET_RUN = dict(Pe=1.0, De=0.5, n=8, nx=32, T=0.5, cadence=0.05)


@lru_cache(maxsize=None)
def preset_run(name: str):
    c = PRESET_RUN
    grid = SpatialGrid(c["nx"], c["nx"])
    params = AbpParams(c["Pe"], c["De"], c["n"], grid)
    state = preset(name, grid).to_state(c["n"])
    return params, integrate(state, params, c["T"], IntegratorConfig(), cadence=c["cadence"])


def invariant_region() -> list[CheckResult]:
    out = []
    for name in ADMISSIBLE_PRESETS:
        _, res = preset_run(name)
        b = check_bounds(res.records)
        out += [
            _ge(f"{name}_rho_min", b.rho_min, -1e-6),
            _le(f"{name}_rho_max", b.rho_max, 1 + 1e-6),
            _ge(f"{name}_f_min", b.min_f, -1e-6),
            _le(f"{name}_clip_activations", b.clip_activations, 0),
        ]
    return out


def energy_balance_order(dts=(0.02, 0.01, 0.005)) -> float:
    grid, n = SpatialGrid(16, 16), 4
    params = AbpParams(1.0, 0.5, n, grid)
    state = preset("polarized-band", grid).to_state(n)
    res = [integrate(state, params, 0.2, IntegratorConfig(dt=dt)).records[-1].balance for dt in dts]
    return math.log2(res[-2] / res[-1])


def gronwall_envelope() -> list[CheckResult]:
    out = []
    for name in ADMISSIBLE_PRESETS:
        params, res = preset_run(name)
        out.append(_le(f"{name}_energy_over_envelope", check_gronwall(res.records, params).worst_ratio, 1 + 1e-6))
    out.append(_within("energy_balance_order", energy_balance_order(), 1.8, 2.2))
    return out


# -- 5: kernel identities -----------------------------------------------------

def kernel_l2_nested_quadrature(t: float, tau0: float = 1e-4, nodes: int = 4096) -> float:
    """``int_0^t int_0^2pi Phi^2 dx ds`` by quadrature in both variables.

    The inner integral uses the periodic trapezoid rule on an explicit cosine
    sum; below ``tau0`` the kernel is replaced by its Gaussian limit, whose
    contribution ``sqrt(tau0 / (2 pi))`` is added in closed form.
    """
    x = TWO_PI * np.arange(nodes) / nodes

    def inner(s):
        N = int(math.ceil(math.sqrt(40.0 / s)))
        k = np.arange(1, N + 1)
        phi = 1.0 / TWO_PI + (np.exp(-(k ** 2) * s)[:, None] * np.cos(np.outer(k, x))).sum(axis=0) / math.pi
        return float(np.sum(phi * phi) * TWO_PI / nodes)

    head = math.sqrt(tau0 / TWO_PI)
    tail, _ = sp_integrate.quad(inner, tau0, t, epsabs=1e-13, epsrel=1e-12, limit=200,
                                points=[1e-3, 1e-2, 1e-1])
    return head + tail


def kernel_identities() -> list[CheckResult]:
    out = []
    x = TWO_PI * np.arange(256) / 256
    mass_err = max(abs(phi1d(t, x).sum() * TWO_PI / 256 - 1.0) for t in (0.01, 0.05, 0.1, 0.7, 2.0))
    out.append(_le("phi1d_unit_mass", mass_err, 1e-10))
    g = TWO_PI * np.arange(64) / 64
    X, Y, TH = np.meshgrid(g, g, g, indexing="ij")
    m3 = phi3d(0.8, np.stack([X, Y, TH], axis=-1)).sum() * (TWO_PI / 64) ** 3
    out.append(_le("phi3d_unit_mass", abs(m3 - 1.0), 1e-10))
    xs = np.linspace(0.0, TWO_PI, 101)
    cross = float(np.max(np.abs(phi1d_series(0.05, xs) - phi1d_product(0.05, xs))))
    out.append(_le("series_vs_product_at_crossover", cross, 1e-12))
    l2 = abs(phi1d_l2_time_integral(0.5) - kernel_l2_nested_quadrature(0.5))
    out.append(_le("kernel_l2_time_integral_vs_quadrature", l2, 1e-8))
    ts = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0]
    lattice = TWO_PI * np.arange(200) / 200
    low = min(float(phi1d(t, lattice).min()) for t in ts)
    out.append(_ge("phi1d_min_on_lattice", low, -1e-13))
    return out


# -- 6: Duhamel residuals -----------------------------------------------------

DUHAMEL_REF = dict(Pe=0.5, De=0.5, n=2, nx=16, T=0.2, snapshots=64, dt=1e-4)


def duhamel_1d_residuals(counts=(16, 32, 64)):
    grid = SpatialGrid(64)
    params = GtParams(1.0, grid)
    state = gt_preset("gt-waves", grid)
    return [duhamel_residual_1d(_snapshots(state, params, 0.2, c, 1e-4), 1.0).max_residual for c in counts]


def duhamel_3d_residuals(counts=(16, 32, 64)):
    c = DUHAMEL_REF
    grid = SpatialGrid(c["nx"], c["nx"])
    params = AbpParams(c["Pe"], c["De"], c["n"], grid)
    state = preset("polarized-band", grid).to_state(c["n"])
    return [duhamel_residual_3d(_snapshots(state, params, c["T"], k, c["dt"]), params).max_residual
            for k in counts]


def duhamel() -> list[CheckResult]:
    r1 = duhamel_1d_residuals()
    r3 = duhamel_3d_residuals()
    out = []
    for label, r in (("1d", r1), ("2d", r3)):
        out.append(_within(f"duhamel_{label}_ratio_coarse", r[0] / r[1], 3.5, 4.5))
        out.append(_within(f"duhamel_{label}_ratio_fine", r[1] / r[2], 3.5, 4.5))
    out.append(_le("duhamel_2d_reference_residual", r3[-1], 5e-4))
    return out


# -- 7: integrator order ------------------------------------------------------

def integrator_order(dts=(0.01, 0.005, 0.0025)) -> float:
    grid, n = SpatialGrid(16, 16), 2
    params = AbpParams(1.0, 0.5, n, grid)
    vals = _random_modes(grid, n, seed=3)
    state = AngularState.from_values(grid, vals[: n + 1], vals[n + 1:])
    u = [integrate(state, params, 0.1, IntegratorConfig(dt=dt), record=False).state.hat for dt in dts]
    return math.log2(np.linalg.norm(u[0] - u[1]) / np.linalg.norm(u[1] - u[2]))


def time_order() -> list[CheckResult]:
    return [_within("etd_rk2_order", integrator_order(), 1.8, 2.2)]


# -- 8: 1D model --------------------------------------------------------------

def gt_decay_rates() -> float:
    grid, T = SpatialGrid(32), 0.5
    x = grid.mesh()[0]
    # modes up to 4 keep amplitudes far above roundoff over the whole window
    rho = 0.5 + sum(0.02 * np.cos(q * x + q) for q in range(1, 5))
    p = 0.05 + sum(0.02 * np.sin(q * x - q) for q in range(1, 5))
    state = GtState.from_rho_p(grid, rho, p)
    final = integrate(state, GtParams(0.0, grid), T, IntegratorConfig(dt=0.01), record=False).state
    rho0, p0 = state.fR.hat + state.fL.hat, state.fR.hat - state.fL.hat
    rho1, p1 = final.fR.hat + final.fL.hat, final.fR.hat - final.fL.hat
    worst = 0.0
    for k in range(5):
        for c0, c1, rate in ((rho0[k], rho1[k], k * k), (p0[k], p1[k], k * k + 2.0)):
            if abs(c0) < 1e-12:
                continue
            measured = -math.log(abs(c1) / abs(c0)) / T
            worst = max(worst, abs(measured - rate) / rate if rate else abs(measured))
    return worst


def gt_model() -> list[CheckResult]:
    out = [_le("gt_decay_rate_rel", gt_decay_rates(), 1e-8)]
    grid = SpatialGrid(64)
    for name in GT_PRESETS:
        res = integrate(gt_preset(name, grid), GtParams(1.0, grid), 0.5, IntegratorConfig(), cadence=0.05)
        b = check_bounds(res.records)
        out += [_ge(f"{name}_f_min", b.min_f, -1e-6), _le(f"{name}_rho_max", b.rho_max, 1 + 1e-6)]
    return out


# -- 9: smoothing -------------------------------------------------------------

SMOOTHING = dict(De=0.5, nx=16, T=0.1, eps=0.1)


def smoothing_norms(Pe: float, mollified: bool, ns=(16, 32)):
    c = SMOOTHING
    grid = SpatialGrid(c["nx"], c["nx"])
    spec = preset("aligned-dirac", grid)
    norms = []
    for n in ns:
        state = spec.to_state(n)
        if mollified:
            state = mollify(state, MollifierSpec(c["eps"]))
        final = integrate(state, AbpParams(Pe, c["De"], n, grid), c["T"], IntegratorConfig(), record=False).state
        norms.append(phase_space_l2(final))
    return norms


def smoothing() -> list[CheckResult]:
    out = []
    for Pe, bound in ((0.0, 1e-6), (1.0, 1e-3)):
        for mollified in (False, True):
            a, b = smoothing_norms(Pe, mollified)
            tag = f"Pe{Pe:g}_{'mollified' if mollified else 'raw'}"
            out.append(CheckResult(f"smoothing_l2_finite_{tag}", math.isfinite(b), b, "finite"))
            out.append(_le(f"smoothing_n16_vs_n32_{tag}", abs(a - b), bound))
    return out


# -- 10: mollifier ------------------------------------------------------------

def mollifier_contract() -> list[CheckResult]:
    grid = SpatialGrid(16, 16)
    spec = preset("aligned-dirac", grid)
    raw = spec.to_state(32)
    mass_err, lo, hi = 0.0, math.inf, -math.inf
    for eps in (0.2, 0.1, 0.05):
        st = mollify(raw, MollifierSpec(eps))
        mass_err = max(mass_err, abs(st.mass() - raw.mass()) / raw.mass())
        lo, hi = min(lo, st.a[0].min()), max(hi, st.a[0].max())
    d = [dual_distance(spec, MollifierSpec(eps), 256) for eps in (0.2, 0.1, 0.05)]
    steps = min(d[0] - d[1], d[1] - d[2])
    return [
        _le("mollify_mass_rel", mass_err, 1e-12),
        _ge("mollify_rho_min", lo, 0.0),
        _le("mollify_rho_max", hi, 1.0),
        CheckResult("mollify_dual_distance_decrease", bool(steps > 0), float(steps), "> 0.0"),
    ]


# -- 11: determinism ----------------------------------------------------------

def determinism() -> list[CheckResult]:
    base = RunConfig(preset="polarized-band", n=4, nx=16, ny=16, T=0.2, cadence=0.02, snapshots=False)
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for workers in (1, 4):
            cfg = RunConfig.from_text(base.to_text())
            cfg.workers = workers
            out = Path(tmp) / f"w{workers}"
            simulate(cfg, out)
            paths.append(out / "diagnostics.csv")
        same = filecmp.cmp(paths[0], paths[1], shallow=False)
    return [CheckResult("diagnostics_identical_across_workers", same, float(same), "== 1.0")]


CRITERIA: dict[int, tuple[str, Callable[[], list[CheckResult]]]] = {
    1: ("linear exactness", linear_exactness),
    2: ("mass conservation", mass_conservation),
    3: ("invariant region", invariant_region),
    4: ("energy envelope", gronwall_envelope),
    5: ("kernel identities", kernel_identities),
    6: ("duhamel residual", duhamel),
    7: ("integrator order", time_order),
    8: ("1d model", gt_model),
    9: ("smoothing", smoothing),
    10: ("mollifier", mollifier_contract),
    11: ("determinism", determinism),
}

SUITES = {
    "linear-exact": (1, 8),
    "invariants": (2, 3, 4, 7, 11),
    "duhamel": (5, 6),
    "smoothing": (9, 10),
}
SUITES["all"] = tuple(sorted({c for v in SUITES.values() for c in v}))


def run_criterion(number: int) -> list[CheckResult]:
    return CRITERIA[number][1]()


def run_suite(name: str, emit: Callable[[str], None] | None = None) -> list[CheckResult]:
    if name not in SUITES:
        raise KeyError(name)
    results = []
    for number in SUITES[name]:
        for r in run_criterion(number):
            results.append(r)
            if emit:
                emit(r.line())
    return results
