"""Periodic heat kernels, heat-flow convolution and Duhamel residuals.

The kernel on the circle is

    Phi(t, x) = 1/(2 pi) + (1/pi) sum_{n>=1} exp(-n^2 t) cos(n x)
              = theta_3(x/2, exp(-t)) / (2 pi).

For ``t >= 0.05`` the cosine series converges in a handful of terms.  Below
that the Jacobi triple product

    theta_3(z, q) = prod_{m>=1} (1 - q^{2m}) (1 + 2 q^{2m-1} cos 2z + q^{4m-2})

is used: every factor is nonnegative, so the evaluated kernel is too.  The
product needs about ``16/t`` factors, so for ``t < 1e-3`` the sum of periodic
Gaussian images is used instead (also a sum of positive terms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy.special import erfc

from .abp2d import AbpParams, Abp2dSystem, mobility
from .errors import ConfigurationError
from .spectral import TWO_PI, get_workers, pad_spectrum, to_physical, to_spectral, truncate_spectrum

SERIES_THRESHOLD = 0.05
#: below this the product needs ~16/t factors; the image sum is used instead
IMAGE_THRESHOLD = 1e-3
DEFAULT_TOL = 1e-14
L2_POISSON_THRESHOLD = 1.0


@dataclass
class KernelEval:
    """Truncated evaluator for ``Phi`` with a cached truncation index per ``t``."""

    tol: float = DEFAULT_TOL
    threshold: float = SERIES_THRESHOLD
    image_threshold: float = IMAGE_THRESHOLD
    _cache: dict = field(default_factory=dict, repr=False)

    def truncation(self, t: float) -> int:
        """Smallest ``N`` with ``exp(-N^2 t) < tol``."""
        _check_time(t)
        if t not in self._cache:
            self._cache[t] = max(1, math.ceil(math.sqrt(-math.log(self.tol) / t)))
        return self._cache[t]

    def remainder_bound(self, t: float) -> float:
        """Bound on the neglected tail ``sum_{n>N} exp(-n^2 t)``."""
        N = self.truncation(t)
        return math.exp(-((N + 1) ** 2) * t) / (1.0 - math.exp(-t))

    def product_terms(self, t: float) -> int:
        """Factors needed so the log of the neglected product stays below ``tol``."""
        q2 = math.exp(-2.0 * t)
        # tail of sum |log factor| <= 4 q^{2M+1} / (1 - q^2)
        need = math.log(self.tol * (1.0 - q2) / 4.0) / (-2.0 * t)
        return max(1, math.ceil(need))

    def series(self, t, x):
        _check_time(t)
        x = np.asarray(x, dtype=float)
        n = np.arange(1, self.truncation(t) + 1, dtype=float)
        w = np.exp(-(n ** 2) * t)
        # sum from the smallest term upwards for a fixed, accurate order
        terms = w[::-1, None] * np.cos(np.outer(n[::-1], x.ravel()))
        return (1.0 / TWO_PI + terms.sum(axis=0) / np.pi).reshape(x.shape)

    def product(self, t, x, chunk: int = 4096):
        _check_time(t)
        x = np.asarray(x, dtype=float)
        c = np.cos(x.ravel())
        M = self.product_terms(t)
        logs = np.zeros_like(c)
        for start in range(1, M + 1, chunk):
            m = np.arange(start, min(M, start + chunk - 1) + 1, dtype=float)[:, None]
            q_odd = np.exp(-(2 * m - 1) * t)
            logs += np.log1p(-np.exp(-2 * m * t)).sum(axis=0)
            # 1 + 2 q cos x + q^2 = (1 - q)^2 + 2 q (1 + cos x) >= 0
            fac = (-np.expm1(-(2 * m - 1) * t)) ** 2 + 2 * q_odd * (1.0 + c[None, :])
            with np.errstate(divide="ignore"):
                logs += np.log(fac).sum(axis=0)
        return (np.exp(logs) / TWO_PI).reshape(x.shape)

    def images(self, t, x):
        """Sum of Gaussians ``(4 pi t)^{-1/2} sum_m exp(-(x - 2 pi m)^2 / (4 t))``."""
        _check_time(t)
        x = np.asarray(x, dtype=float)
        r = np.mod(x.ravel(), TWO_PI)
        # images beyond +-(2 pi) are below exp(-pi^2/t) relative, negligible for small t
        m = np.arange(-2, 3, dtype=float)[:, None]
        g = np.exp(-((r[None, :] - TWO_PI * m) ** 2) / (4.0 * t)).sum(axis=0)
        return (g / math.sqrt(4.0 * math.pi * t)).reshape(x.shape)

    def __call__(self, t, x):
        if t >= self.threshold:
            return self.series(t, x)
        if t < self.image_threshold:
            return self.images(t, x)
        return self.product(t, x)


_default = KernelEval()


def _check_time(t):
    if not t > 0:
        raise ConfigurationError(f"kernel time must be positive, got {t}")


def phi1d(t: float, x):
    """Periodic heat kernel on ``[0, 2 pi)``."""
    return _default(t, x)


def phi1d_series(t: float, x):
    return _default.series(t, x)


def phi1d_product(t: float, x):
    return _default.product(t, x)


def phi3d(t: float, xi):
    """Product kernel ``Phi(t,x) Phi(t,y) Phi(t,th)``; ``xi`` has trailing size 3."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 3:
        raise ConfigurationError("phi3d expects points with 3 coordinates")
    return phi1d(t, xi[..., 0]) * phi1d(t, xi[..., 1]) * phi1d(t, xi[..., 2])


def phi1d_l2_time_integral(t: float, tol: float = 1e-16) -> float:
    """``int_0^t ||Phi(s)||^2_{L^2(0,2pi)} ds``.

    Since ``||Phi(s)||^2 = 1/(2pi) + (1/pi) sum exp(-2 n^2 s)``, this equals
    ``(1/2pi) [t + sum_{n>=1} (1 - exp(-2 n^2 t)) / n^2]``.  For small ``t``
    the Poisson-summed form of the integrand is integrated term by term.
    """
    _check_time(t)
    if t >= L2_POISSON_THRESHOLD:
        N = max(1, math.ceil(math.sqrt(-math.log(tol) / (2.0 * t))))
        n = np.arange(N, 0, -1, dtype=float)
        tail = float(np.sum(np.exp(-2.0 * n * n * t) / (n * n)))
        return (t + math.pi ** 2 / 6.0 - tail) / TWO_PI
    # ||Phi(s)||^2 = (1/2pi) sqrt(pi/(2s)) (1 + 2 sum_m exp(-pi^2 m^2 / (2s)))
    total = 2.0 * math.sqrt(t)
    m = 1
    while True:
        c = (math.pi * m) ** 2 / 2.0
        term = 2.0 * (2.0 * math.sqrt(t) * math.exp(-c / t) - 2.0 * math.sqrt(math.pi * c) * erfc(math.sqrt(c / t)))
        total += term
        if abs(term) < tol * total:
            break
        m += 1
    return math.sqrt(math.pi / 2.0) * total / TWO_PI


def heat_convolve(psi, t: float, rates=None):
    """Apply the heat semigroup to periodic samples on ``[0, 2pi)^d``.

    Mode ``(p_1, ..., p_d)`` is multiplied by ``exp(-sum_j rates_j p_j^2 t)``;
    with unit rates this is convolution with the periodic kernel.
    """
    if t < 0:
        raise ConfigurationError(f"time must be nonnegative, got {t}")
    psi = np.asarray(psi, dtype=float)
    d = psi.ndim
    rates = np.ones(d) if rates is None else np.broadcast_to(np.asarray(rates, dtype=float), (d,))
    if t == 0:
        return psi.copy()
    hat = scipy.fft.rfftn(psi, workers=get_workers())
    expo = np.zeros(hat.shape)
    for j, n in enumerate(psi.shape):
        if j == d - 1:
            k = np.arange(n // 2 + 1, dtype=float)
        else:
            k = scipy.fft.fftfreq(n, 1.0 / n)
        shape = [1] * d
        shape[j] = -1
        expo = expo + rates[j] * (k ** 2).reshape(shape)
    return scipy.fft.irfftn(hat * np.exp(-expo * t), s=psi.shape, workers=get_workers())


# -- Duhamel residuals ---------------------------------------------------------

@dataclass
class DuhamelReport:
    max_residual: float
    residual: np.ndarray
    n_snapshots: int
    spacing: float

    def __post_init__(self):
        self.max_residual = abs(float(self.max_residual))


def _uniform_spacing(times):
    times = np.asarray(times, dtype=float)
    if len(times) < 2:
        raise ConfigurationError("need at least two snapshots")
    steps = np.diff(times)
    h = steps.mean()
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-12):
        raise ConfigurationError("snapshots must be uniformly spaced")
    return float(h)


def _duhamel(u_snaps, sources, rates, times):
    """``u(T) - [e^{-LT} u(0) + int_0^T e^{-L(T-s)} S(s) ds]`` by trapezoid."""
    T = times[-1] - times[0]
    h = _uniform_spacing(times)
    acc = np.exp(-rates * T) * u_snaps[0]
    integral = np.zeros_like(u_snaps[0])
    last = len(times) - 1
    for j, (s, S) in enumerate(zip(times, sources)):
        w = 0.5 if j in (0, last) else 1.0
        integral = integral + w * np.exp(-rates * (times[-1] - s)) * S
    return u_snaps[-1] - acc - h * integral, h


def duhamel_residual_1d(snapshots, Pe: float, dealias_factor: int = 2, min_snapshots: int = 3) -> DuhamelReport:
    """Check both components of the 1D model against their Duhamel formulas.

    The right-mover satisfies ``fR = Phi * fR0 - int Phi * (Pe d_x(fR M) + fR - fL)``
    and the left-mover the mirrored identity.
    """
    if len(snapshots) < min_snapshots:
        raise ConfigurationError(f"need at least {min_snapshots} snapshots, got {len(snapshots)}")
    g = snapshots[0].grid
    fine = g.refined(dealias_factor)
    q2 = g.wavenumber_squared()
    ik = 1j * g.derivative_wavenumbers()[0]
    u, src = [], []
    for st in snapshots:
        fR, fL = st.fR.hat, st.fL.hat
        u.append(np.stack([fR, fL]))
        if Pe != 0:
            Rf = to_physical(pad_spectrum(fR, g, dealias_factor), fine)
            Lf = to_physical(pad_spectrum(fL, g, dealias_factor), fine)
            M = mobility(Rf + Lf)
            dR = Pe * ik * truncate_spectrum(to_spectral(Rf * M, fine), g, dealias_factor)
            dL = -Pe * ik * truncate_spectrum(to_spectral(Lf * M, fine), g, dealias_factor)
        else:
            dR = dL = 0.0
        # d_t f = f'' - S
        src.append(-np.stack([dR + fR - fL, dL + fL - fR]))
    times = np.array([st.time for st in snapshots])
    res_hat, h = _duhamel(u, src, np.stack([q2, q2]), times)
    res = to_physical(res_hat, g)
    return DuhamelReport(np.max(np.abs(res)), res, len(snapshots), h)


def duhamel_residual_3d(snapshots, params: AbpParams, min_snapshots: int = 3) -> DuhamelReport:
    """Mode-wise Duhamel check with rates ``De (p^2 + q^2) + k^2``; source is the drift."""
    if len(snapshots) < min_snapshots:
        raise ConfigurationError(f"need at least {min_snapshots} snapshots, got {len(snapshots)}")
    system = Abp2dSystem(params)
    u = [st.hat for st in snapshots]
    src = [system.nonlinear(st.hat) for st in snapshots]
    times = np.array([st.time for st in snapshots])
    res_hat, h = _duhamel(u, src, system.rates, times)
    res = to_physical(res_hat, params.grid)
    return DuhamelReport(np.max(np.abs(res)), res, len(snapshots), h)
