"""Angular Galerkin system for the 2D crowded active Brownian particle model.

The phase-space density is truncated to

    f(x, th) = a0/(2pi) + (1/pi) sum_{k=1..n} (a_k cos k th + b_k sin k th)

and each coefficient field evolves by

    d_t a0  = -Pe    div[M J_0] + De lap a0
    d_t a_k = -Pe/2  div[M J_k] + De lap a_k - k^2 a_k
    d_t b_k = -Pe/2  div[M Q_k] + De lap b_k - k^2 b_k

with the cutoff mobility ``M = (1 - (a0)_+)_+``.  Fields are stored as one
stacked half spectrum ``(2n+1, nx, ny//2+1)`` ordered ``a0..an, b1..bn``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, check_finite
from .spectral import (
    TWO_PI,
    SpatialGrid,
    SpectralField,
    pad_spectrum,
    reconstruct_angle,
    to_physical,
    to_spectral,
    truncate_spectrum,
)


@dataclass(frozen=True)
class AbpParams:
    """Physical and discretisation parameters of the 2D model.

    ``j1_a0_weight`` is the factor multiplying ``a0`` in ``J_1`` and ``Q_1``.
    The default 2 reproduces the reference velocity table; projecting
    ``f e(th)`` onto ``cos th``/``sin th`` exactly gives 1.
    """

    Pe: float
    De: float
    n: int
    grid: SpatialGrid
    phi_mass: float | None = None
    j1_a0_weight: float = 2.0
    dealias_factor: int = 2

    def __post_init__(self):
        if not self.Pe >= 0:
            raise ConfigurationError(f"Pe must be >= 0, got {self.Pe}")
        if not 0 < self.De <= 1:
            raise ConfigurationError(f"De must lie in (0, 1], got {self.De}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"angular truncation n must be an integer >= 1, got {self.n}")
        if self.grid.ndim != 2:
            raise ConfigurationError("the 2D model needs a 2D grid")
        if self.phi_mass is not None and not 0 <= self.phi_mass < 1:
            raise ConfigurationError(f"phi_mass must lie in [0, 1), got {self.phi_mass}")
        if self.dealias_factor < 1:
            raise ConfigurationError("dealias_factor must be >= 1")


class AngularState:
    """Truncated density ``f^n`` held as stacked coefficient spectra."""

    def __init__(self, grid: SpatialGrid, n: int, hat: np.ndarray, time: float = 0.0):
        hat = np.asarray(hat, dtype=complex)
        if hat.shape != (2 * n + 1,) + grid.spectral_shape:
            raise ConfigurationError(
                f"expected coefficient stack {(2 * n + 1,) + grid.spectral_shape}, got {hat.shape}"
            )
        self.grid = grid
        self.n = int(n)
        self.hat = hat
        self.time = float(time)
        self._values = None

    @classmethod
    def from_values(cls, grid, a, b, time=0.0):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float).reshape((a.shape[0] - 1,) + grid.shape)
        n = a.shape[0] - 1
        stack = np.concatenate([a, b], axis=0)
        return cls(grid, n, to_spectral(stack, grid), time)

    @classmethod
    def from_fields(cls, a_fields, b_fields, time=0.0):
        grid = a_fields[0].grid
        a = np.stack([f.values for f in a_fields])
        b = np.stack([f.values for f in b_fields]) if b_fields else np.zeros((0,) + grid.shape)
        return cls.from_values(grid, a, b, time)

    @classmethod
    def isotropic(cls, grid, n, rho, time=0.0):
        a = np.zeros((n + 1,) + grid.shape)
        a[0] = rho
        return cls.from_values(grid, a, np.zeros((n,) + grid.shape), time)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = to_physical(self.hat, self.grid)
        return self._values

    @property
    def a(self) -> np.ndarray:
        return self.values[: self.n + 1]

    @property
    def b(self) -> np.ndarray:
        return self.values[self.n + 1:]

    def a_field(self, k: int) -> SpectralField:
        return SpectralField(self.grid, self.a[k])

    def b_field(self, k: int) -> SpectralField:
        if not 1 <= k <= self.n:
            raise IndexError(f"b_k defined for 1 <= k <= {self.n}, got {k}")
        return SpectralField(self.grid, self.b[k - 1])

    @property
    def rho(self) -> SpectralField:
        """Spatial density; identical to the constant angular coefficient."""
        return self.a_field(0)

    @property
    def polarization(self) -> tuple[SpectralField, SpectralField]:
        return self.a_field(1), self.b_field(1)

    def reconstruct(self, theta) -> np.ndarray:
        return reconstruct_angle(self.a, self.b, np.asarray(theta, dtype=float))

    def mass(self) -> float:
        return float(self.hat[0, 0, 0].real * self.grid.volume)

    def copy(self, hat=None, time=None) -> "AngularState":
        return AngularState(self.grid, self.n, self.hat.copy() if hat is None else hat,
                            self.time if time is None else time)

    def __repr__(self):
        return f"AngularState(n={self.n}, grid={self.grid.shape}, t={self.time:g})"


def mobility(rho):
    """Cutoff mobility ``(1 - (rho)_+)_+``; accepts arrays or SpectralFields."""
    if isinstance(rho, SpectralField):
        return SpectralField(rho.grid, mobility(rho.values))
    rho = np.asarray(rho, dtype=float)
    return np.maximum(1.0 - np.maximum(rho, 0.0), 0.0)


def _padded_modes(a, b, weight):
    """Coefficient stacks with a_{n+1} = b_{n+1} = 0, b_0 = 0 and a_0 scaled."""
    n = b.shape[0]
    A = np.zeros((n + 2,) + a.shape[1:])
    B = np.zeros((n + 2,) + a.shape[1:])
    A[: n + 1] = a
    A[0] *= weight
    B[1: n + 1] = b
    return A, B


def _velocity_stack(a, b, weight):
    """x and y components of J_0..J_n, Q_1..Q_n stacked like the state."""
    n = b.shape[0]
    A, B = _padded_modes(a, b, weight)
    k = np.arange(1, n + 1)
    vx = np.empty((2 * n + 1,) + a.shape[1:])
    vy = np.empty_like(vx)
    vx[0], vy[0] = a[1], b[0]
    vx[1: n + 1] = A[k + 1] + A[k - 1]
    vy[1: n + 1] = B[k + 1] - B[k - 1]
    vx[n + 1:] = B[k + 1] + B[k - 1]
    vy[n + 1:] = A[k - 1] - A[k + 1]
    return vx, vy


def velocities(state: AngularState, k: int, j1_a0_weight: float = 2.0):
    """Mode-coupling velocities ``(J_k, Q_k)`` as pairs of value arrays.

    ``Q_0`` does not exist and is returned as ``None``.
    """
    if not 0 <= k <= state.n:
        raise IndexError(f"mode index {k} outside 0..{state.n}")
    vx, vy = _velocity_stack(state.a, state.b, j1_a0_weight)
    J = (vx[k], vy[k])
    Q = None if k == 0 else (vx[state.n + k], vy[state.n + k])
    return J, Q


def linear_symbol(params: AbpParams, k, p, q):
    """Decay rate of angular mode ``k`` at spatial wavenumber ``(p, q)``."""
    return params.De * (np.asarray(p, float) ** 2 + np.asarray(q, float) ** 2) + np.asarray(k, float) ** 2


def mode_indices(n: int) -> np.ndarray:
    """Angular wavenumber of each entry of the stacked state."""
    return np.concatenate([np.arange(n + 1), np.arange(1, n + 1)])


class Abp2dSystem:
    """Semi-discrete system ``du/dt = -L u + N(u)`` in the stacked spectrum."""

    energy_weight = 1.0

    def __init__(self, params: AbpParams):
        self.params = params
        self.grid = params.grid
        self.n = params.n
        k = mode_indices(self.n).reshape((-1, 1, 1))
        self.rates = params.De * self.grid.wavenumber_squared()[None] + k.astype(float) ** 2
        self.fine = self.grid.refined(params.dealias_factor)
        kx, ky = self.grid.derivative_wavenumbers()
        self._ikx, self._iky = 1j * kx, 1j * ky
        coef = np.full(2 * self.n + 1, 0.5 * params.Pe)
        coef[0] = params.Pe
        self._coef = coef.reshape((-1, 1, 1))

    def physical_fine(self, u_hat):
        return to_physical(pad_spectrum(u_hat, self.grid, self.params.dealias_factor), self.fine)

    def nonlinear(self, u_hat: np.ndarray) -> np.ndarray:
        """Spectrum of the drift term ``-c_k Pe div(M J_k)``."""
        if self.params.Pe == 0:
            return np.zeros_like(u_hat)
        vals = self.physical_fine(u_hat)
        check_finite(vals, "state")
        n = self.n
        M = mobility(vals[0])
        vx, vy = _velocity_stack(vals[: n + 1], vals[n + 1:], self.params.j1_a0_weight)
        fac = self.params.dealias_factor
        fx = truncate_spectrum(to_spectral(M * vx, self.fine), self.grid, fac)
        fy = truncate_spectrum(to_spectral(M * vy, self.fine), self.grid, fac)
        return -self._coef * (self._ikx * fx + self._iky * fy)

    def rhs_hat(self, u_hat):
        return -self.rates * u_hat + self.nonlinear(u_hat)

    # adapters used by the generic integrator and diagnostics
    def pack(self, state: AngularState) -> np.ndarray:
        return state.hat

    def unpack(self, u_hat, time) -> AngularState:
        return AngularState(self.grid, self.n, u_hat, time)

    def velocity_bound(self, u_hat) -> float:
        """Conservative sup bound of |J| used by the step-size policy."""
        vals = to_physical(u_hat, self.grid)
        rho_max = float(np.max(np.abs(vals[0])))
        return 2.0 * (rho_max + float(np.sum(np.max(np.abs(vals[1:].reshape(2 * self.n, -1)), axis=1))))

    def density(self, u_hat) -> np.ndarray:
        return to_physical(u_hat[0], self.grid)


def rhs(state: AngularState, params: AbpParams) -> AngularState:
    """Time derivative of every coefficient field, returned as a state."""
    system = Abp2dSystem(params)
    if state.n != params.n or state.grid != params.grid:
        raise ConfigurationError("state and parameters disagree on n or grid")
    check_finite(state.values, "state")
    return AngularState(state.grid, state.n, system.rhs_hat(state.hat), state.time)


def isotropic_mass(state: AngularState) -> float:
    """Total mass ``int rho dx`` (equals ``int int f dth dx``)."""
    return state.mass()


def f_integral_check(state: AngularState, n_theta: int = 64) -> float:
    """Brute-force ``int int f`` by angular and spatial quadrature (for tests)."""
    th = np.arange(n_theta) * TWO_PI / n_theta
    f = state.reconstruct(th)
    return float(f.sum() * (TWO_PI / n_theta) * state.grid.cell_volume)
