"""Crowded two-velocity (Goldstein-Taylor type) model on the circle.

Right- and left-moving densities obey

    d_t fR = -Pe d_x[fR M] + fR'' + fL - fR
    d_t fL = +Pe d_x[fL M] + fL'' + fR - fL

with ``M = (1 - (fR + fL)_+)_+``.  Adding and subtracting gives a system for
``rho = fR + fL`` and ``p = fR - fL`` whose linear part is diagonal, which is
how the solver advances it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abp2d import mobility
from .errors import ConfigurationError, check_finite
from .spectral import (
    SpatialGrid,
    SpectralField,
    pad_spectrum,
    to_physical,
    to_spectral,
    truncate_spectrum,
)


@dataclass(frozen=True)
class GtParams:
    """Parameters of the 1D model: Peclet number and grid."""

    Pe: float
    grid: SpatialGrid
    dealias_factor: int = 2

    def __post_init__(self):
        if not self.Pe >= 0:
            raise ConfigurationError(f"Pe must be >= 0, got {self.Pe}")
        if self.grid.ndim != 1:
            raise ConfigurationError("the 1D model needs a 1D grid")


class GtState:
    """Pair of 1D densities ``(fR, fL)`` at a given time."""

    def __init__(self, fR: SpectralField, fL: SpectralField, time: float = 0.0):
        if fR.grid != fL.grid:
            raise ConfigurationError("fR and fL must share a grid")
        if fR.grid.ndim != 1:
            raise ConfigurationError("GtState needs a 1D grid")
        self.fR = fR
        self.fL = fL
        self.time = float(time)

    @property
    def grid(self) -> SpatialGrid:
        return self.fR.grid

    @classmethod
    def from_values(cls, grid, fR, fL, time=0.0):
        return cls(SpectralField(grid, fR), SpectralField(grid, fL), time)

    @classmethod
    def from_rho_p(cls, grid, rho, p, time=0.0):
        rho = np.asarray(rho, dtype=float)
        p = np.asarray(p, dtype=float)
        return cls.from_values(grid, 0.5 * (rho + p), 0.5 * (rho - p), time)

    def rho_p(self) -> tuple[SpectralField, SpectralField]:
        return rho_p(self)

    def mass(self) -> float:
        return float(self.grid.volume * (self.fR.hat[0] + self.fL.hat[0]).real)

    def __repr__(self):
        return f"GtState(nx={self.grid.nx}, t={self.time:g})"


def rho_p(state: GtState) -> tuple[SpectralField, SpectralField]:
    """Space density and polarisation ``(fR + fL, fR - fL)``."""
    g = state.grid
    return (SpectralField(g, state.fR.values + state.fL.values),
            SpectralField(g, state.fR.values - state.fL.values))


def _drift_flux_hat(rho, p, grid, fine, factor):
    """Spectra of ``rho M`` and ``p M`` (products taken on the fine grid)."""
    rf = to_physical(pad_spectrum(rho, grid, factor), fine)
    pf = to_physical(pad_spectrum(p, grid, factor), fine)
    M = mobility(rf)
    return (truncate_spectrum(to_spectral(rf * M, fine), grid, factor),
            truncate_spectrum(to_spectral(pf * M, fine), grid, factor))


def gt_rhs(state: GtState, Pe: float, dealias_factor: int = 2) -> GtState:
    """Time derivative of ``(fR, fL)`` in cutoff form."""
    g = state.grid
    check_finite(np.stack([state.fR.values, state.fL.values]), "state")
    q = g.wavenumbers()[0]
    ik = 1j * g.derivative_wavenumbers()[0]
    fR, fL = state.fR.hat, state.fL.hat
    dR = -q ** 2 * fR + fL - fR
    dL = -q ** 2 * fL + fR - fL
    if Pe != 0:
        fine = g.refined(dealias_factor)
        Rf = to_physical(pad_spectrum(fR, g, dealias_factor), fine)
        Lf = to_physical(pad_spectrum(fL, g, dealias_factor), fine)
        M = mobility(Rf + Lf)
        dR = dR - Pe * ik * truncate_spectrum(to_spectral(Rf * M, fine), g, dealias_factor)
        dL = dL + Pe * ik * truncate_spectrum(to_spectral(Lf * M, fine), g, dealias_factor)
    return GtState(SpectralField(g, to_physical(dR, g)), SpectralField(g, to_physical(dL, g)), state.time)


class Gt1dSystem:
    """Stacked ``(rho, p)`` spectra with rates ``q^2`` and ``q^2 + 2``."""

    energy_weight = 0.5  # ||fR||^2 + ||fL||^2 = (||rho||^2 + ||p||^2) / 2

    def __init__(self, params: GtParams):
        self.params = params
        grid = params.grid
        self.grid = grid
        self.Pe = float(params.Pe)
        self.factor = dealias_factor = params.dealias_factor
        self.fine = grid.refined(dealias_factor)
        q2 = grid.wavenumber_squared()
        self.rates = np.stack([q2, q2 + 2.0])
        self._ik = 1j * grid.derivative_wavenumbers()[0]

    def nonlinear(self, u_hat):
        if self.Pe == 0:
            return np.zeros_like(u_hat)
        check_finite(to_physical(u_hat, self.grid), "state")
        rho_flux, p_flux = _drift_flux_hat(u_hat[0], u_hat[1], self.grid, self.fine, self.factor)
        # d_t rho = -Pe d_x(p M),  d_t p = -Pe d_x(rho M)
        return -self.Pe * self._ik * np.stack([p_flux, rho_flux])

    def rhs_hat(self, u_hat):
        return -self.rates * u_hat + self.nonlinear(u_hat)

    def pack(self, state: GtState) -> np.ndarray:
        return np.stack([state.fR.hat + state.fL.hat, state.fR.hat - state.fL.hat])

    def unpack(self, u_hat, time) -> GtState:
        vals = to_physical(u_hat, self.grid)
        return GtState.from_rho_p(self.grid, vals[0], vals[1], time)

    def velocity_bound(self, u_hat) -> float:
        # |fR M| + |fL M| <= |rho| + |p|
        vals = to_physical(u_hat, self.grid)
        return float(np.max(np.abs(vals[0])) + np.max(np.abs(vals[1])))

    def density(self, u_hat) -> np.ndarray:
        return to_physical(u_hat[0], self.grid)
