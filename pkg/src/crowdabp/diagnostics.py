"""Runtime monitors for the a-priori estimates of both models.

Conventions
-----------
* mass is ``int rho dx``; for the 2D model ``rho = a0`` so an isotropic state
  with ``a0 = phi`` has mass ``(2 pi)^2 phi``.
* ``energy`` is ``E = sum_k ||a_k||^2 + ||b_k||^2`` (2D) or
  ``||fR||^2 + ||fL||^2`` (1D), all norms in ``L^2`` of the spatial torus.
* ``dissipation`` and ``work`` are trapezoid time integrals of
  ``sum_k k^2 ||.||^2 + De ||grad .||^2`` and of the drift pairing
  ``sum_k <a_k, N_k>``; ``balance`` is ``|E - E0 + 2D - 2W|``.
* ``phase_l2`` is ``||f||`` in ``L^2`` over position and angle, i.e.
  ``(||a0||^2/(2 pi) + sum_k (||a_k||^2 + ||b_k||^2)/pi)^(1/2)``.
* ``dual_norm`` is ``(int_x ||d_th L_th f(x, .)||^2 dx)^(1/2)``; neither of these two
  is defined for the 1D model and both are written as ``nan`` there.

CSV rows use ``repr`` floats so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .abp2d import AbpParams, AngularState
from .gt1d import GtState
from .spectral import TWO_PI, default_theta_count, dual_seminorm_angle, l2_norm_sq, theta_nodes

SCHEMA_VERSION = 1
C_GROWTH = 8.0
ENVELOPE_SLACK = 1e-6
BOUNDS_TOL = 1e-6


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    mass: float
    min_f: float
    rho_min: float
    rho_max: float
    energy: float
    dissipation: float
    work: float
    balance: float
    phase_l2: float
    dual_norm: float
    clip_activations: int

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_row(self) -> list[str]:
        return [repr(int(v)) if isinstance(v, (int, np.integer)) else repr(float(v)) for v in astuple(self)]

    @classmethod
    def from_row(cls, row: Sequence[str]) -> "DiagnosticsRecord":
        vals = [float(v) for v in row]
        vals[-1] = int(vals[-1])
        return cls(*vals)


def write_csv(records: Iterable[DiagnosticsRecord], stream) -> None:
    stream.write(f"#schema={SCHEMA_VERSION}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(DiagnosticsRecord.columns())
    for r in records:
        w.writerow(r.to_row())


def read_csv(stream) -> list[DiagnosticsRecord]:
    first = stream.readline().strip()
    if first != f"#schema={SCHEMA_VERSION}":
        raise ValueError(f"unsupported diagnostics schema line {first!r}")
    reader = csv.reader(stream)
    header = next(reader)
    if header != DiagnosticsRecord.columns():
        raise ValueError(f"unexpected diagnostics columns {header}")
    return [DiagnosticsRecord.from_row(row) for row in reader if row]


def records_to_csv(records) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


# -- per-state quantities ------------------------------------------------------

def min_f(state, n_theta: int | None = None) -> float:
    if isinstance(state, GtState):
        return float(min(state.fR.values.min(), state.fL.values.min()))
    n_theta = n_theta or default_theta_count(state.n, minimum=64)
    return float(state.reconstruct(theta_nodes(n_theta)).min())


def density_values(state) -> np.ndarray:
    if isinstance(state, GtState):
        return state.fR.values + state.fL.values
    return state.a[0]


def energy(state) -> float:
    if isinstance(state, GtState):
        g = state.grid
        return float(l2_norm_sq(state.fR.hat, g) + l2_norm_sq(state.fL.hat, g))
    return float(np.sum(l2_norm_sq(state.hat, state.grid)))


def dual_norm(state) -> float:
    """``L^2_x`` norm of the angular dual seminorm (2D states only)."""
    if isinstance(state, GtState):
        return math.nan
    d = dual_seminorm_angle(state.a, state.b)
    return float(math.sqrt(np.sum(d * d) * state.grid.cell_volume))


def phase_space_l2(state) -> float:
    """``||f||_{L^2}`` over position and angle from the mode norms (nan in 1D)."""
    if isinstance(state, GtState):
        return math.nan
    norms = l2_norm_sq(state.hat, state.grid)
    return float(math.sqrt(norms[0] / TWO_PI + norms[1:].sum() / math.pi))


def record(state, params=None, ledger=None) -> DiagnosticsRecord:
    """Snapshot of every monitored quantity for one state.

    Without a ledger the time integrals are reported as zero.
    """
    rho = density_values(state)
    mass = float(state.mass())
    e = energy(state)
    diss = ledger.dissipation if ledger is not None else 0.0
    work = ledger.work if ledger is not None else 0.0
    bal = ledger.residual(e) if ledger is not None else 0.0
    clips = ledger.clip_activations if ledger is not None else 0
    return DiagnosticsRecord(
        time=float(state.time), mass=mass, min_f=min_f(state),
        rho_min=float(rho.min()), rho_max=float(rho.max()), energy=e,
        dissipation=float(diss), work=float(work), balance=float(bal),
        phase_l2=phase_space_l2(state), dual_norm=dual_norm(state), clip_activations=int(clips),
    )


def make_record(state, params, ledger, system, u_hat) -> DiagnosticsRecord:
    """Hook used by the integrator at observation times."""
    return record(state, params, ledger)


# -- series checks -------------------------------------------------------------

@dataclass(frozen=True)
class GronwallReport:
    passed: bool
    worst_ratio: float
    max_balance: float

    @property
    def margin(self) -> float:
        """Fraction of the envelope left unused at the tightest record."""
        return 1.0 - self.worst_ratio


def growth_rate(params) -> float:
    De = getattr(params, "De", 1.0)
    return C_GROWTH * params.Pe ** 2 / De


def check_gronwall(series: Sequence[DiagnosticsRecord], params) -> GronwallReport:
    """Compare energies against ``E(0) exp(8 Pe^2/De t)``.

    ``worst_ratio`` is the largest ``E(t)/envelope(t)`` over records after the
    first (where the ratio is 1 by construction); the check passes when it
    stays below ``1 + 1e-6``.
    """
    if len(series) < 2:
        raise ValueError("need at least two records")
    lam = growth_rate(params)
    e0, t0 = series[0].energy, series[0].time
    worst = 0.0
    for r in series[1:]:
        env = e0 * math.exp(lam * (r.time - t0))
        if env > 0:
            worst = max(worst, r.energy / env)
        elif r.energy > 0:
            worst = math.inf
    bal = max(r.balance for r in series)
    return GronwallReport(worst <= 1.0 + ENVELOPE_SLACK, worst, bal)


@dataclass(frozen=True)
class BoundsReport:
    passed: bool
    min_f: float
    rho_min: float
    rho_max: float
    clip_activations: int


def check_bounds(series: Sequence[DiagnosticsRecord], tol: float = BOUNDS_TOL) -> BoundsReport:
    mf = min(r.min_f for r in series)
    lo = min(r.rho_min for r in series)
    hi = max(r.rho_max for r in series)
    clips = max(r.clip_activations for r in series)
    ok = mf >= -tol and lo >= -tol and hi <= 1.0 + tol
    return BoundsReport(ok, mf, lo, hi, clips)


def mass_drift(series: Sequence[DiagnosticsRecord]) -> float:
    """Largest relative deviation of the mass from its first value."""
    m0 = series[0].mass
    scale = abs(m0) if m0 != 0 else 1.0
    return max(abs(r.mass - m0) for r in series) / scale


def dissipation_monotone(series: Sequence[DiagnosticsRecord]) -> bool:
    d = [r.dissipation for r in series]
    return all(b >= a for a, b in zip(d, d[1:]))


def smoothing_metric(state: AngularState) -> tuple[float, float]:
    """Phase-space ``L^2`` norm and angular dual norm of a 2D state."""
    return phase_space_l2(state), dual_norm(state)


def state_distance(s1: AngularState, s2: AngularState) -> float:
    """``||f1 - f2||`` in ``L^2`` over position and angle."""
    diff = AngularState(s1.grid, s1.n, s1.hat - s2.hat, s1.time)
    return phase_space_l2(diff)


@dataclass(frozen=True)
class DependenceProbe:
    times: np.ndarray
    distances: np.ndarray
    delta: float
    rate: float


def continuous_dependence(s1: AngularState, s2: AngularState, params: AbpParams, T: float,
                          config=None, cadence: float | None = None) -> DependenceProbe:
    """Track ``||f1(t) - f2(t)||`` and the exponential rate it implies.

    ``rate`` is ``max_t log(d(t)/d(0))/t``; a regression value of it is what
    the test suite pins.
    """
    from .integrate import integrate

    cadence = cadence or T / 10
    snaps1, snaps2 = [], []
    integrate(s1, params, T, config, observers=[lambda s, r: snaps1.append(s)], cadence=cadence, record=False)
    integrate(s2, params, T, config, observers=[lambda s, r: snaps2.append(s)], cadence=cadence, record=False)
    times = np.array([s.time for s in snaps1])
    dist = np.array([state_distance(a, b) for a, b in zip(snaps1, snaps2)])
    delta = float(dist[0])
    with np.errstate(divide="ignore"):
        rates = np.log(dist[1:] / delta) / (times[1:] - times[0])
    rate = float(np.max(rates)) if rates.size else 0.0
    return DependenceProbe(times, dist, delta, rate)
