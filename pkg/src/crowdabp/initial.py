"""Initial data: projection onto angular modes, admissibility checks,
Dirac-in-angle data and its mollification, presets and CSV input.

Mollifier
---------
The spatial bump ``beta`` is ``c exp(-1/(1 - r^2))`` with
``r = |x - (pi, pi)| / pi`` and the angular bump ``gamma`` is its 1D analogue
centred at ``pi``; both are normalised to unit integral.  The scaled kernels
``beta_eps(x) = eps^-2 beta(x/eps)`` and
``gamma_eps(th) = eps^-alpha gamma(th/eps^alpha)`` are applied as Fourier
multipliers.  Because the bumps are centred at ``pi`` rather than at the
origin, convolution also translates the data by ``eps pi`` in space and by
``eps^alpha pi`` in angle; the multipliers reproduce that literally.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import iv, j0

from .abp2d import AngularState
from .errors import ConfigurationError
from .gt1d import GtState
from .spectral import (
    TWO_PI,
    SpatialGrid,
    SpectralField,
    angular_quadrature,
    default_theta_count,
    dual_seminorm_angle,
    theta_nodes,
    to_physical,
)

ADMISSIBLE_TOL = 1e-12
KINDS = ("samples", "modes", "dirac")


@dataclass
class InitialSpec:
    """Initial datum in one of three forms.

    * ``samples``: ``f`` values of shape ``(nx, ny, n_theta)``;
    * ``modes``: coefficient arrays ``a`` (n+1 fields) and ``b`` (n fields);
    * ``dirac``: density ``h0`` concentrated at orientation ``theta_star``.
    """

    kind: str
    grid: SpatialGrid
    samples: np.ndarray | None = None
    a: np.ndarray | None = None
    b: np.ndarray | None = None
    h0: np.ndarray | None = None
    theta_star: float = 0.0
    phi: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown initial-data kind {self.kind!r}")
        need = {"samples": ("samples",), "modes": ("a", "b"), "dirac": ("h0",)}[self.kind]
        for name in need:
            if getattr(self, name) is None:
                raise ConfigurationError(f"{self.kind} data requires {name!r}")

    def to_state(self, n: int) -> AngularState:
        if self.kind == "samples":
            return project_f0(self.samples, self.grid, n)
        if self.kind == "dirac":
            return dirac_in_angle(SpectralField(self.grid, self.h0), self.theta_star, n)
        a, b = _resize_modes(np.asarray(self.a, float), np.asarray(self.b, float), n)
        return AngularState.from_values(self.grid, a, b)


def _resize_modes(a, b, n):
    """Truncate or zero-pad a mode list to ``n`` angular modes."""
    shape = a.shape[1:]
    a2 = np.zeros((n + 1,) + shape)
    b2 = np.zeros((n,) + shape)
    m = min(n, b.shape[0])
    a2[: m + 1] = a[: m + 1]
    b2[:m] = b[:m]
    return a2, b2


def project_f0(samples, grid: SpatialGrid, n: int) -> AngularState:
    """Angular moments ``a_k = int f cos k th``, ``b_k = int f sin k th``.

    ``samples`` has shape ``(nx, ny, n_theta)`` on uniform angular nodes.
    """
    samples = np.asarray(samples, dtype=float)
    n_theta = samples.shape[-1]
    if samples.shape[:-1] != grid.shape:
        raise ConfigurationError(f"samples shape {samples.shape} does not match grid {grid.shape}")
    if n_theta < 2 * n + 2:
        raise ConfigurationError(f"{n_theta} angular nodes cannot resolve n={n} (need {2 * n + 2})")
    th = theta_nodes(n_theta)
    k = np.arange(n + 1)
    cos = np.cos(np.outer(k, th))
    sin = np.sin(np.outer(k[1:], th))
    a = angular_quadrature(samples[None] * cos[:, None, None, :])
    b = angular_quadrature(samples[None] * sin[:, None, None, :])
    return AngularState.from_values(grid, a, b)


# -- admissibility -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    quantity: str
    index: tuple
    value: float

    def __str__(self):
        return f"{self.quantity}={self.value!r} at {self.index}"


def _collect(mask, values, quantity, limit):
    idx = np.argwhere(mask)
    return [Violation(quantity, tuple(int(i) for i in j), float(values[tuple(j)])) for j in idx[:limit]]


def validate(spec, tol: float = ADMISSIBLE_TOL, limit: int = 100) -> list[Violation]:
    """Admissibility of initial data: ``f >= 0`` and ``0 <= rho <= 1``.

    Accepts an :class:`InitialSpec`, an :class:`AngularState` or a
    :class:`GtState`.  Returns the list of violations (empty when admissible),
    the first entry of each quantity carrying the extreme value.
    """
    if isinstance(spec, GtState):
        f = np.stack([spec.fR.values, spec.fL.values])
        rho = f.sum(axis=0)
    elif isinstance(spec, InitialSpec) and spec.kind == "dirac":
        h = np.asarray(spec.h0, float)
        out = _extreme(h < -tol, h, "h0", limit, True)
        out += _extreme(h > 1 + tol, h, "h0", limit, False)
        return out
    elif isinstance(spec, InitialSpec) and spec.kind == "samples":
        f = np.asarray(spec.samples, float)
        rho = angular_quadrature(f)
    else:
        state = spec.to_state(spec.b.shape[0]) if isinstance(spec, InitialSpec) else spec
        th = theta_nodes(default_theta_count(state.n, minimum=64))
        f = state.reconstruct(th)
        rho = state.a[0]
    out = _extreme(f < -tol, f, "f", limit, True)
    out += _extreme(rho < -tol, rho, "rho", limit, True)
    out += _extreme(rho > 1 + tol, rho, "rho", limit, False)
    return out


def _extreme(mask, values, quantity, limit, low):
    """Violations with the extreme offending node listed first."""
    if not mask.any():
        return []
    masked = np.where(mask, values, np.inf if low else -np.inf)
    flat = np.argmin(masked) if low else np.argmax(masked)
    worst = tuple(int(i) for i in np.unravel_index(flat, values.shape))
    first = Violation(quantity, worst, float(values[worst]))
    rest = [v for v in _collect(mask, values, quantity, limit) if v.index != worst]
    return [first] + rest[: limit - 1]


# -- Dirac data ----------------------------------------------------------------

def dirac_moments(h0: np.ndarray, theta_star: float, n: int):
    """Moment arrays ``a_k = h0 cos k th*``, ``b_k = h0 sin k th*``."""
    h0 = np.asarray(h0, dtype=float)
    k = np.arange(n + 1).reshape((-1,) + (1,) * h0.ndim)
    a = h0[None] * np.cos(k * theta_star)
    b = h0[None] * np.sin(k[1:] * theta_star)
    return a, b


def dirac_in_angle(h0, theta_star: float, n: int) -> AngularState:
    """Truncation at ``n`` of ``h0(x) delta(th - th*)``."""
    if not isinstance(h0, SpectralField):
        raise ConfigurationError("h0 must be a SpectralField")
    a, b = dirac_moments(h0.values, theta_star, n)
    return AngularState.from_values(h0.grid, a, b)


# -- mollifier -----------------------------------------------------------------

_GL_NODES = 400


def _bump(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _gauss_legendre(a, b, n=_GL_NODES):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


@dataclass(frozen=True)
class MollifierSpec:
    eps: float
    alpha: float = 3.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigurationError(f"eps must be positive, got {self.eps}")
        if not self.alpha > 2:
            raise ConfigurationError(f"alpha must exceed 2, got {self.alpha}")

    # radial profiles in the distance from the bump centre
    @staticmethod
    def beta_constant() -> float:
        rho, w = _gauss_legendre(0.0, math.pi)
        return 1.0 / (TWO_PI * float(np.sum(w * _bump(rho / math.pi) * rho)))

    @staticmethod
    def gamma_constant() -> float:
        v, w = _gauss_legendre(0.0, math.pi)
        return 1.0 / (2.0 * float(np.sum(w * _bump(v / math.pi))))

    @classmethod
    def beta(cls, x, y):
        r = np.hypot(np.asarray(x) - math.pi, np.asarray(y) - math.pi) / math.pi
        return cls.beta_constant() * _bump(r)

    @classmethod
    def gamma(cls, th):
        return cls.gamma_constant() * _bump((np.asarray(th) - math.pi) / math.pi)

    def beta_eps(self, x, y):
        return self.beta(np.asarray(x) / self.eps, np.asarray(y) / self.eps) / self.eps ** 2

    def gamma_eps(self, th):
        s = self.eps ** self.alpha
        return self.gamma(np.asarray(th) / s) / s

    def masses(self) -> tuple[float, float]:
        """``(int beta, int gamma)`` by independent tensor quadrature."""
        x, wx = _gauss_legendre(0.0, TWO_PI)
        X, Y = np.meshgrid(x, x, indexing="ij")
        mb = float(np.sum(wx[:, None] * wx[None, :] * self.beta(X, Y)))
        mg = float(np.sum(wx * self.gamma(x)))
        return mb, mg

    def spatial_multiplier(self, grid: SpatialGrid) -> np.ndarray:
        """``int beta_eps(z) exp(-i p.z) dz`` on the half spectrum of ``grid``."""
        kx, ky = grid.wavenumbers()
        s = self.eps * np.hypot(kx, ky)
        rho, w = _gauss_legendre(0.0, math.pi)
        radial = self.beta_constant() * _bump(rho / math.pi) * rho * w
        B = TWO_PI * (j0(np.multiply.outer(s, rho)) @ radial)
        phase = np.exp(-1j * self.eps * math.pi * (kx + ky))
        return phase * B

    def angular_multiplier(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Gain ``G_k`` and phase ``phi_k`` of the angular convolution, k = 0..n."""
        s = self.eps ** self.alpha
        k = np.arange(n + 1, dtype=float)
        v, w = _gauss_legendre(0.0, math.pi)
        G = 2.0 * (np.cos(np.outer(k * s, v)) @ (self.gamma_constant() * _bump(v / math.pi) * w))
        return G, k * math.pi * s


def apply_angular_multiplier(a, b, G, phase):
    """Rotate ``(a_k, b_k)`` by ``phase_k`` and scale by ``G_k``."""
    shape = (-1,) + (1,) * (a.ndim - 1)
    c = np.cos(phase[1:]).reshape(shape)
    s = np.sin(phase[1:]).reshape(shape)
    g = G[1:].reshape(shape)
    a_new = np.empty_like(a)
    a_new[0] = G[0] * a[0]
    a_new[1:] = g * (a[1:] * c - b * s)
    b_new = g * (a[1:] * s + b * c)
    return a_new, b_new


def mollify(data, spec: MollifierSpec, n: int | None = None) -> AngularState:
    """Convolve data with ``beta_eps`` in space and ``gamma_eps`` in angle.

    ``data`` is an :class:`InitialSpec` (any kind) or an :class:`AngularState`.
    """
    if isinstance(data, InitialSpec):
        if n is None:
            raise ConfigurationError("mollifying an InitialSpec needs a truncation n")
        state = data.to_state(n)
    elif isinstance(data, AngularState):
        state = data
    else:
        raise ConfigurationError(f"cannot mollify {type(data).__name__}")
    grid, nn = state.grid, state.n
    hat = state.hat * spec.spatial_multiplier(grid)[None]
    G, phase = spec.angular_multiplier(nn)
    a_hat, b_hat = apply_angular_multiplier(hat[: nn + 1], hat[nn + 1:], G, phase)
    return AngularState(grid, nn, np.concatenate([a_hat, b_hat]), state.time)


def dual_distance(data: InitialSpec, spec: MollifierSpec, n: int) -> float:
    """``L^2_x`` norm of the angular dual seminorm of ``f0 - f0^eps`` at truncation ``n``."""
    raw = data.to_state(n)
    smooth = mollify(raw, spec)
    diff = to_physical(raw.hat - smooth.hat, raw.grid)
    d = dual_seminorm_angle(diff[: n + 1], diff[n + 1:])
    return float(math.sqrt(np.sum(d * d) * raw.grid.cell_volume))


def shift_angle(state: AngularState, phi: float) -> AngularState:
    """Rotate the orientation variable: ``f(x, th) -> f(x, th - phi)``."""
    k = np.arange(state.n + 1) * phi
    a, b = apply_angular_multiplier(state.hat[: state.n + 1], state.hat[state.n + 1:],
                                    np.ones(state.n + 1), k)
    return AngularState(state.grid, state.n, np.concatenate([a, b]), state.time)


# -- presets -------------------------------------------------------------------

ADMISSIBLE_PRESETS = (
    "isotropic-uniform",
    "one-mode-perturbation",
    "polarized-band",
    "von-mises-patch",
    "jammed-peak",
)
PRESETS = ADMISSIBLE_PRESETS + ("aligned-dirac",)
GT_PRESETS = ("gt-waves", "gt-plateau")


def preset(name: str, grid: SpatialGrid, phi: float = 0.5, theta_star: float = 0.0) -> InitialSpec:
    """Named initial data on a 2D grid; ``phi`` is the mean density."""
    X, Y = grid.mesh()
    z = np.zeros(grid.shape)
    if name == "isotropic-uniform":
        return InitialSpec("modes", grid, a=np.array([z + phi, z]), b=np.array([z]), phi=phi)
    if name == "one-mode-perturbation":
        rho = phi * (1.0 + 0.2 * np.cos(X))
        return InitialSpec("modes", grid, a=np.array([rho, 0.25 * rho * np.sin(Y)]),
                           b=np.array([z]), phi=phi)
    if name == "polarized-band":
        rho = phi + 0.2 * phi * np.cos(X)
        c, psi = 0.8, math.pi / 3
        return InitialSpec("modes", grid, a=np.array([rho, 0.5 * c * rho * math.cos(psi)]),
                           b=np.array([0.5 * c * rho * math.sin(psi)]), phi=phi)
    if name == "von-mises-patch":
        rho = phi * (1.0 + 0.6 * np.cos(X) * np.cos(Y))
        kappa, mu, m = 2.0, X, 12
        r = iv(np.arange(m + 1), kappa) / iv(0, kappa)
        k = np.arange(m + 1).reshape(-1, 1, 1)
        a = rho[None] * r.reshape(-1, 1, 1) * np.cos(k * mu[None])
        b = rho[None] * r[1:].reshape(-1, 1, 1) * np.sin(k[1:] * mu[None])
        return InitialSpec("modes", grid, a=a, b=b, phi=phi)
    if name == "jammed-peak":
        rho = 0.55 + 0.45 * np.cos(X) * np.cos(Y)
        return InitialSpec("modes", grid, a=np.array([rho, 0.3 * rho * (1.0 - rho)]),
                           b=np.array([0.3 * rho * (1.0 - rho) * np.sin(X)]), phi=0.55)
    if name == "aligned-dirac":
        h0 = phi * (1.0 + 0.4 * np.cos(X) * np.sin(Y))
        return InitialSpec("dirac", grid, h0=h0, theta_star=theta_star, phi=phi)
    raise ConfigurationError(f"unknown preset {name!r}; choose from {PRESETS}")


def gt_preset(name: str, grid: SpatialGrid, phi: float = 0.5) -> GtState:
    """Named initial data for the 1D model (``phi`` is the mean of ``rho``)."""
    (x,) = grid.mesh()
    if name == "gt-waves":
        fR = 0.5 * phi * (1.0 + 0.5 * np.cos(x))
        fL = 0.5 * phi * (1.0 + 0.5 * np.sin(2 * x))
        return GtState.from_values(grid, fR, fL)
    if name == "gt-plateau":
        rho = 0.55 + 0.45 * np.cos(x)
        return GtState.from_rho_p(grid, rho, 0.5 * rho * (1.0 - rho))
    raise ConfigurationError(f"unknown 1D preset {name!r}; choose from {GT_PRESETS}")


# -- CSV input -----------------------------------------------------------------

def load_csv(path, n_theta_min: int = 2) -> InitialSpec:
    """Read ``x, y, theta, f`` rows on a full tensor grid into sample form."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        cols = {c.strip().lower(): c for c in (reader.fieldnames or [])}
        try:
            keys = [cols["x"], cols["y"], cols.get("theta") or cols["θ"], cols["f"]]
        except KeyError as exc:
            raise ConfigurationError(f"{path}: missing column {exc}; expected x, y, theta, f") from exc
        for row in reader:
            rows.append([float(row[k]) for k in keys])
    if not rows:
        raise ConfigurationError(f"{path}: no data rows")
    data = np.array(rows)
    axes = [np.unique(np.round(data[:, i], 12)) for i in range(3)]
    nx, ny, nt = (len(ax) for ax in axes)
    if nx * ny * nt != len(data):
        raise ConfigurationError(f"{path}: rows do not form a full {nx}x{ny}x{nt} grid")
    grid = SpatialGrid(nx, ny)
    for ax, n in zip(axes, (nx, ny, nt)):
        if not np.allclose(ax, TWO_PI * np.arange(n) / n, atol=1e-9):
            raise ConfigurationError(f"{path}: coordinates must be uniform nodes 2*pi*i/n")
    idx = [np.searchsorted(ax, np.round(data[:, i], 12)) for i, ax in enumerate(axes)]
    f = np.empty((nx, ny, nt))
    f[idx[0], idx[1], idx[2]] = data[:, 3]
    return InitialSpec("samples", grid, samples=f)


def write_csv(path, samples: np.ndarray) -> None:
    """Write ``(nx, ny, n_theta)`` samples as ``x, y, theta, f`` rows."""
    nx, ny, nt = samples.shape
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "theta", "f"])
        for i in range(nx):
            for j in range(ny):
                for k in range(nt):
                    w.writerow([repr(TWO_PI * i / nx), repr(TWO_PI * j / ny), repr(TWO_PI * k / nt),
                                repr(float(samples[i, j, k]))])
