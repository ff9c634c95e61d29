"""Periodic grids, real trigonometric transforms and angular quadrature.

Fields live on ``[0, 2pi)`` (1D) or ``[0, 2pi)^2`` (2D) sampled at
``x_i = 2 pi i / nx``.  Two coefficient views are offered:

* the *complex* half spectrum used by the solvers (``to_spectral`` /
  ``to_physical``), normalised so that ``f(x) = sum_p c_p exp(i p x)``;
* the *real* cos/sin tensors (``forward_transform`` / ``inverse_transform``)
  in which each coefficient is the plain amplitude of its basis function,
  e.g. ``f = sum alpha1[p, q] cos(px) cos(qy) + alpha2[p, q] cos(px) sin(qy)
  + alpha3[p, q] sin(px) cos(qy) + alpha4[p, q] sin(px) sin(qy)``.

Transforms are backed by :mod:`scipy.fft`; the worker count can be set with
:func:`set_workers` or the ``ABP_THREADS`` environment variable and never
changes results.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft

from .errors import ConfigurationError

TWO_PI = 2.0 * np.pi

#: Poincare constant of H^1_0(0, 2pi): ||u||^2 <= C_P ||u'||^2, C_P = (2pi/pi)^2.
POINCARE_CONSTANT = 4.0

_workers = max(1, int(os.environ.get("ABP_THREADS", "1") or 1))


def set_workers(n: int) -> None:
    """Set the number of threads used by the FFT backend."""
    global _workers
    if n < 1:
        raise ConfigurationError(f"worker count must be >= 1, got {n}")
    _workers = int(n)


def get_workers() -> int:
    return _workers


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic collocation grid on ``[0, 2pi)^d`` (d = 1 or 2)."""

    nx: int
    ny: int | None = None

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if n is None:
                continue
            if int(n) != n or n < 4 or n % 2:
                raise ConfigurationError(f"{name} must be an even integer >= 4, got {n}")

    @property
    def ndim(self) -> int:
        return 1 if self.ny is None else 2

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nx,) if self.ny is None else (self.nx, self.ny)

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        if self.ny is None:
            return (self.nx // 2 + 1,)
        return (self.nx, self.ny // 2 + 1)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def dx(self) -> float:
        return TWO_PI / self.nx

    @property
    def volume(self) -> float:
        return TWO_PI ** self.ndim

    @property
    def cell_volume(self) -> float:
        return self.volume / self.size

    def axis(self, i: int = 0) -> np.ndarray:
        n = self.shape[i]
        return TWO_PI * np.arange(n) / n

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays with ``indexing='ij'`` (x varies along axis 0)."""
        return np.meshgrid(*(self.axis(i) for i in range(self.ndim)), indexing="ij")

    def refined(self, factor: int = 2) -> "SpatialGrid":
        return SpatialGrid(self.nx * factor, None if self.ny is None else self.ny * factor)

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers broadcastable against the half spectrum."""
        if self.ny is None:
            return (np.arange(self.nx // 2 + 1, dtype=float),)
        kx = scipy.fft.fftfreq(self.nx, 1.0 / self.nx)[:, None]
        ky = np.arange(self.ny // 2 + 1, dtype=float)[None, :]
        return kx, ky

    def derivative_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """As :meth:`wavenumbers` with the Nyquist entries zeroed."""
        out = []
        for k, n in zip(self.wavenumbers(), self.shape):
            k = k.copy()
            k[np.abs(k) == n // 2] = 0.0
            out.append(k)
        return tuple(out)

    def wavenumber_squared(self) -> np.ndarray:
        ks = self.wavenumbers()
        out = np.zeros(self.spectral_shape)
        for k in ks:
            out = out + k**2
        return out

    def resolved_mask(self) -> np.ndarray:
        """True on modes strictly inside the Nyquist band on every axis."""
        mask = np.ones(self.spectral_shape, dtype=bool)
        for k, n in zip(self.wavenumbers(), self.shape):
            mask &= np.abs(k) < n // 2
        return mask

    def spectral_weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum entry in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        n_last = self.shape[-1]
        w[..., n_last // 2] = 1.0
        return w


def _axes(ndim: int) -> tuple[int, ...]:
    return tuple(range(-ndim, 0))


def to_spectral(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Half spectrum of real samples; trailing axes must match ``grid.shape``."""
    values = np.asarray(values, dtype=float)
    if values.shape[values.ndim - grid.ndim:] != grid.shape:
        raise ConfigurationError(f"values shape {values.shape} does not end with grid shape {grid.shape}")
    return scipy.fft.rfftn(values, axes=_axes(grid.ndim), norm="forward", workers=_workers)


def to_physical(hat: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    if hat.shape[hat.ndim - grid.ndim:] != grid.spectral_shape:
        raise ConfigurationError(
            f"coefficient shape {hat.shape} does not end with {grid.spectral_shape}"
        )
    return scipy.fft.irfftn(hat, s=grid.shape, axes=_axes(grid.ndim), norm="forward", workers=_workers)


def pad_spectrum(hat: np.ndarray, grid: SpatialGrid, factor: int = 2) -> np.ndarray:
    """Embed resolved modes of ``grid`` into the spectrum of a refined grid.

    Nyquist entries are dropped; with ``norm='forward'`` no rescaling is needed.
    """
    fine = grid.refined(factor)
    lead = hat.shape[: hat.ndim - grid.ndim]
    out = np.zeros(lead + fine.spectral_shape, dtype=complex)
    if grid.ndim == 1:
        h = grid.nx // 2
        out[..., :h] = hat[..., :h]
        return out
    hx, hy = grid.nx // 2, grid.ny // 2
    out[..., :hx, :hy] = hat[..., :hx, :hy]
    out[..., -(hx - 1):, :hy] = hat[..., hx + 1:, :hy]
    return out


def truncate_spectrum(hat_fine: np.ndarray, grid: SpatialGrid, factor: int = 2) -> np.ndarray:
    """Inverse of :func:`pad_spectrum`: keep resolved modes of ``grid``."""
    lead = hat_fine.shape[: hat_fine.ndim - grid.ndim]
    out = np.zeros(lead + grid.spectral_shape, dtype=complex)
    if grid.ndim == 1:
        h = grid.nx // 2
        out[..., :h] = hat_fine[..., :h]
        return out
    hx, hy = grid.nx // 2, grid.ny // 2
    out[..., :hx, :hy] = hat_fine[..., :hx, :hy]
    out[..., hx + 1:, :hy] = hat_fine[..., -(hx - 1):, :hy]
    return out


def l2_inner(hat1: np.ndarray, hat2: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Continuous L^2(Omega) inner product of two trigonometric fields.

    Reduces over the trailing spectral axes; leading axes are kept.
    """
    w = grid.spectral_weights()
    prod = (np.conj(hat1) * hat2).real * w
    return grid.volume * prod.sum(axis=_axes(grid.ndim))


def l2_norm_sq(hat: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    w = grid.spectral_weights()
    return grid.volume * ((hat.real**2 + hat.imag**2) * w).sum(axis=_axes(grid.ndim))


def gradient_norm_sq(hat: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """||grad f||^2 over Omega using resolved derivative wavenumbers."""
    ks = grid.derivative_wavenumbers()
    k2 = sum(k**2 for k in ks)
    w = grid.spectral_weights() * k2
    return grid.volume * ((hat.real**2 + hat.imag**2) * w).sum(axis=_axes(grid.ndim))


# -- real cos/sin coefficient tensors ---------------------------------------

class Trig1D(NamedTuple):
    cos: np.ndarray
    sin: np.ndarray


class Trig2D(NamedTuple):
    """Amplitudes of cos*cos, cos*sin, sin*cos, sin*sin for (p, q) >= 0."""

    cc: np.ndarray
    cs: np.ndarray
    sc: np.ndarray
    ss: np.ndarray


def _edge_factor(n: int) -> np.ndarray:
    """1/2 on p in {0, n/2} (where +p and -p coincide), 1 elsewhere."""
    f = np.ones(n // 2 + 1)
    f[0] = f[-1] = 0.5
    return f


def parseval_weights(grid: SpatialGrid) -> np.ndarray:
    """Grid mean of each squared basis function (1 on edge modes, 1/2 inside)."""
    wx = np.full(grid.nx // 2 + 1, 0.5)
    wx[0] = wx[-1] = 1.0
    if grid.ndim == 1:
        return wx
    wy = np.full(grid.ny // 2 + 1, 0.5)
    wy[0] = wy[-1] = 1.0
    return wx[:, None] * wy[None, :]


def forward_transform(values: np.ndarray, grid: SpatialGrid) -> Trig1D | Trig2D:
    """Real trigonometric coefficients reproducing ``values`` at every node."""
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ConfigurationError(f"values shape {values.shape} != grid shape {grid.shape}")
    if grid.ndim == 1:
        c = scipy.fft.rfft(values, norm="forward")
        w = 2.0 * _edge_factor(grid.nx)
        cos = w * c.real
        sin = -w * c.imag
        sin[0] = sin[-1] = 0.0
        return Trig1D(cos, sin)

    nx, ny = grid.shape
    c = scipy.fft.fft2(values, norm="forward", workers=_workers)
    p = np.arange(nx // 2 + 1)
    q = np.arange(ny // 2 + 1)
    P, Q = np.meshgrid(p, q, indexing="ij")
    Pm, Qm = (-P) % nx, (-Q) % ny
    cpp, cmp_, cpm, cmm = c[P, Q], c[Pm, Q], c[P, Qm], c[Pm, Qm]
    w = _edge_factor(nx)[:, None] * _edge_factor(ny)[None, :]
    cc = w * (cpp + cmp_ + cpm + cmm).real
    cs = w * (1j * (cpp - cpm + cmp_ - cmm)).real
    sc = w * (1j * (cpp - cmp_ + cpm - cmm)).real
    ss = -w * (cpp - cmp_ - cpm + cmm).real
    for arr, axis_sin in ((cs, "y"), (sc, "x"), (ss, "xy")):
        if "x" in axis_sin:
            arr[0, :] = arr[-1, :] = 0.0
        if "y" in axis_sin:
            arr[:, 0] = arr[:, -1] = 0.0
    return Trig2D(cc, cs, sc, ss)


def inverse_transform(coeffs: Trig1D | Trig2D, grid: SpatialGrid) -> np.ndarray:
    """Collocation values of a real cos/sin series (sin terms at p = 0, n/2 vanish)."""
    if grid.ndim == 1:
        if not isinstance(coeffs, Trig1D) or np.shape(coeffs.cos) != (grid.nx // 2 + 1,):
            raise ConfigurationError("coefficient shape does not match the 1D grid")
        sin = np.array(coeffs.sin, dtype=float)
        sin[0] = sin[-1] = 0.0
        c = 0.5 * (np.asarray(coeffs.cos) - 1j * sin) / _edge_factor(grid.nx)
        return scipy.fft.irfft(c, n=grid.nx, norm="forward")

    nx, ny = grid.shape
    expected = (nx // 2 + 1, ny // 2 + 1)
    if not isinstance(coeffs, Trig2D) or any(np.shape(a) != expected for a in coeffs):
        raise ConfigurationError(f"coefficient tensors must have shape {expected}")
    cc, cs, sc, ss = (np.array(a, dtype=float) for a in coeffs)
    sc[0, :] = sc[-1, :] = 0.0
    ss[0, :] = ss[-1, :] = 0.0
    cs[:, 0] = cs[:, -1] = 0.0
    ss[:, 0] = ss[:, -1] = 0.0
    g = 1.0 / (_edge_factor(nx)[:, None] * _edge_factor(ny)[None, :])
    half = np.zeros((nx, ny // 2 + 1), dtype=complex)
    pos = 0.25 * g * (cc - 1j * cs - 1j * sc - ss)
    neg = 0.25 * g * (cc - 1j * cs + 1j * sc + ss)
    p = np.arange(nx // 2 + 1)
    # negative rows first so p = 0 and p = nx/2 end up holding the +p value
    half[(-p) % nx, :] = neg
    half[p, :] = pos
    return scipy.fft.irfft2(half, s=(nx, ny), norm="forward", workers=_workers)


class SpectralField:
    """Real scalar field with collocation values and cached coefficients."""

    def __init__(self, grid: SpatialGrid, values):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            if values.ndim == 0:
                values = np.full(grid.shape, float(values))
            else:
                raise ConfigurationError(f"values shape {values.shape} != grid shape {grid.shape}")
        self.grid = grid
        self._values = values
        self._coeffs = None
        self._hat = None

    @classmethod
    def from_coeffs(cls, grid: SpatialGrid, coeffs) -> "SpectralField":
        field = cls(grid, inverse_transform(coeffs, grid))
        return field

    @classmethod
    def from_function(cls, grid: SpatialGrid, func) -> "SpectralField":
        return cls(grid, func(*grid.mesh()))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @values.setter
    def values(self, new):
        self._values = np.array(new, dtype=float).reshape(self.grid.shape)
        self._coeffs = None
        self._hat = None

    @property
    def coeffs(self) -> Trig1D | Trig2D:
        if self._coeffs is None:
            self._coeffs = forward_transform(self._values, self.grid)
        return self._coeffs

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            self._hat = to_spectral(self._values, self.grid)
        return self._hat

    def mean(self) -> float:
        return float(self._values.mean())

    def integral(self) -> float:
        return float(self._values.sum() * self.grid.cell_volume)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self._values**2) * self.grid.cell_volume))

    def __repr__(self):
        return f"SpectralField(grid={self.grid}, mean={self.mean():.6g})"


# -- angular helpers ----------------------------------------------------------

def theta_nodes(n_theta: int) -> np.ndarray:
    if n_theta < 2:
        raise ConfigurationError(f"need at least 2 angular nodes, got {n_theta}")
    return TWO_PI * np.arange(n_theta) / n_theta


def default_theta_count(n: int, minimum: int = 16) -> int:
    return max(2 * n + 2, minimum)


def angular_quadrature(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Periodic trapezoid rule over uniform angular nodes along ``axis``.

    Exact for trigonometric polynomials of degree below the node count.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    if n < 2:
        raise ConfigurationError(f"need at least 2 angular nodes, got {n}")
    return values.sum(axis=axis) * (TWO_PI / n)


def reconstruct_angle(a: np.ndarray, b: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Evaluate ``a0/(2pi) + (1/pi) sum_k (a_k cos k th + b_k sin k th)``.

    ``a`` has shape ``(n+1, *S)``, ``b`` shape ``(n, *S)``; result is
    ``(len(theta), *S)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    k = np.arange(1, n + 1)
    cos = np.cos(np.outer(theta, k))
    sin = np.sin(np.outer(theta, k))
    flat_a = a[1:].reshape(n, -1)
    flat_b = b.reshape(n, -1)
    out = a[0].reshape(1, -1) / TWO_PI + (cos @ flat_a + sin @ flat_b) / np.pi
    return out.reshape((len(theta),) + a.shape[1:])


def _dirichlet_parts(a: np.ndarray, b: np.ndarray):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    k = np.arange(1, n + 1, dtype=float).reshape((n,) + (1,) * (a.ndim - 1))
    c = a[0] / TWO_PI
    amp_cos = a[1:] / np.pi
    amp_sin = b / np.pi
    return c, amp_cos, amp_sin, k


def angular_dirichlet_solution(a: np.ndarray, b: np.ndarray, theta: np.ndarray):
    """Solve ``-u'' = f`` on (0, 2pi) with ``u(0) = u(2pi) = 0`` in closed form.

    ``f`` is given by its angular modes (same layout as :func:`reconstruct_angle`).
    Returns ``(u, du)`` evaluated at ``theta``, shape ``(len(theta), *S)``.
    """
    c, A, B, _ = _dirichlet_parts(a, b)
    tt = np.asarray(theta, dtype=float).reshape((-1,) + (1,) * np.ndim(c))
    u = c * (TWO_PI * tt - tt**2) / 2.0
    du = c * (np.pi - tt)
    for i in range(A.shape[0]):
        kv = i + 1.0
        u = u + (A[i] * (np.cos(kv * tt) - 1.0) + B[i] * np.sin(kv * tt)) / kv**2
        du = du + (-A[i] * np.sin(kv * tt) + B[i] * np.cos(kv * tt)) / kv
    return u, du


def dual_seminorm_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``||d/dth L f||_{L^2(0, 2pi)}`` with ``L`` the inverse Dirichlet Laplacian.

    ``f = a0/(2pi) + (1/pi) sum_k (a_k cos k th + b_k sin k th)``; the mean is
    handled by the exact quadratic solution ``c (2 pi th - th^2) / 2`` rather
    than discarded.  Vectorised over trailing spatial axes.
    """
    c, A, B, k = _dirichlet_parts(a, b)
    sq = c**2 * (2.0 * np.pi**3 / 3.0)
    if A.shape[0]:
        sq = sq + np.pi * np.sum((A**2 + B**2) / k**2, axis=0)
        sq = sq - 4.0 * np.pi * c * np.sum(A / k**2, axis=0)
    return np.sqrt(np.maximum(sq, 0.0))
