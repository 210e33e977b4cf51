"""Deterministic kernels: the smoothing bump, its autocorrelation, and heat-kernel integrals.

Everything downstream (noise generation, overlap integrals, limit covariances)
consumes the radial tables built here.  Tables are immutable and cheap to share
across workers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

__all__ = [
    "Mollifier",
    "CovarianceKernel",
    "RadialTable",
    "make_mollifier",
    "autocorrelate",
    "heat_kernel",
    "heat_kernel_time_integral",
    "green_overlap",
    "sphere_area",
    "export_radial_csv",
]

QUAD_ABS_TOL = 1e-8
# dense resampling grid used for the fast linear-interp hot path
_FAST_GRID = 4096


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True, eq=False)
class RadialTable:
    """Radially symmetric function tabulated on [0, support]; zero outside.

    Monotone cubic (PCHIP) fit through the quadrature nodes, resampled onto a
    dense uniform grid so evaluation is a single np.interp call.  A nonzero
    tail_coeff continues the table as tail_coeff * r^(2-d) beyond the grid.
    """

    dim: int
    support: float
    grid: np.ndarray
    values: np.ndarray
    tail_coeff: float = 0.0

    def __call__(self, r):
        # the grid is uniform, so linear interpolation is two gathers
        r = np.asarray(r, dtype=float)
        scale = (len(self.grid) - 1) / self.support
        x = np.clip(r * scale, 0.0, len(self.grid) - 1)
        idx = np.minimum(x.astype(np.int64), len(self.grid) - 2)
        frac = x - idx
        out = self.values[idx] * (1.0 - frac) + self.values[idx + 1] * frac
        if self.tail_coeff == 0.0:
            out = np.where(r >= self.support, 0.0, out)
        else:
            far = r > self.support
            if np.any(far):
                out = np.where(
                    far,
                    self.tail_coeff * np.maximum(r, 1e-300) ** (2 - self.dim),
                    out,
                )
        return out if out.ndim else float(out)

    def eval_masked(self, rsq: np.ndarray) -> np.ndarray:
        """Evaluate from squared radii, touching only entries inside the support."""
        out = np.zeros_like(rsq)
        mask = rsq < self.support * self.support
        if np.any(mask):
            out[mask] = self(np.sqrt(rsq[mask]))
        return out

    def radial_integral(self, weight_power: int = 0) -> float:
        """quad of value(r) * r^(d-1+weight_power) over the support."""
        p = self.dim - 1 + weight_power
        val, _ = quad(lambda r: self(r) * r**p, 0.0, self.support,
                      epsabs=QUAD_ABS_TOL, limit=200)
        return val

    def volume_integral(self) -> float:
        """Integral over R^d by radial reduction."""
        return sphere_area(self.dim) * self.radial_integral()


def _bump_profile(r):
    """Unnormalized smooth bump exp(-1/(1-4r^2)) on r < 1/2, zero outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 0.5
    x = 1.0 - 4.0 * r[inside] ** 2
    out[inside] = np.exp(-1.0 / x)
    return out


def _dense_resample(dim, support, nodes, node_vals):
    interp = PchipInterpolator(nodes, node_vals, extrapolate=False)
    grid = np.linspace(0.0, support, _FAST_GRID)
    vals = interp(grid)
    vals[np.isnan(vals)] = 0.0
    vals[-1] = 0.0
    return RadialTable(dim=dim, support=support, grid=grid, values=vals)


@dataclass(frozen=True, eq=False)
class Mollifier:
    """Normalized smooth bump supported in the ball of radius 1/2."""

    dim: int
    table: RadialTable
    norm_const: float

    support_radius = 0.5

    def __call__(self, r):
        return self.table(r)

    def volume_integral(self) -> float:
        return self.table.volume_integral()

    def scaled(self, x_abs, eps: float):
        """phi_eps(|x|) = eps^-d * phi(|x|/eps)."""
        return self.table(np.asarray(x_abs) / eps) * eps ** (-self.dim)


@dataclass(frozen=True, eq=False)
class CovarianceKernel:
    """Autocorrelation V = phi * phi, supported in the unit ball."""

    dim: int
    table: RadialTable
    v0: float

    support_radius = 1.0

    def __call__(self, r):
        return self.table(r)

    def volume_integral(self) -> float:
        return self.table.volume_integral()


@lru_cache(maxsize=8)
def make_mollifier(d: int, resolution: int = 1024) -> Mollifier:
    """Normalized standard bump in dimension d.

    The profile is c * exp(-1/(1-4r^2)) on r < 1/2 with c fixed so the
    d-dimensional integral is 1.
    """
    if d < 3:
        raise ValueError(f"dimension must be >= 3, got {d}")
    if resolution < 64:
        raise ValueError(f"resolution must be >= 64 radial samples, got {resolution}")
    raw, _ = quad(lambda r: _bump_profile(r) * r ** (d - 1), 0.0, 0.5,
                  epsabs=QUAD_ABS_TOL, limit=200)
    c = 1.0 / (sphere_area(d) * raw)
    nodes = np.linspace(0.0, 0.5, resolution + 1)
    table = _dense_resample(d, 0.5, nodes, c * _bump_profile(nodes))
    return Mollifier(dim=d, table=table, norm_const=c)


def _convolution_at(m: Mollifier, r: float, gauss_u) -> float:
    """(phi * phi)(r e_1) by radial reduction of the d-dim convolution."""
    d = m.dim
    u, w = gauss_u
    if d == 3:
        ang_w = w
    else:
        ang_w = w * (1.0 - u**2) ** ((d - 3) / 2.0)
    area = sphere_area(d - 1)

    def integrand(rho):
        sep = np.sqrt(np.maximum(rho**2 + r**2 - 2.0 * rho * r * u, 0.0))
        return m(rho) * rho ** (d - 1) * np.dot(ang_w, m(sep))

    lo = max(0.0, r - m.support_radius)
    hi = min(m.support_radius, r + m.support_radius)
    if lo >= hi:
        return 0.0
    val, _ = quad(integrand, lo, hi, epsabs=QUAD_ABS_TOL, limit=200)
    return area * val


@lru_cache(maxsize=8)
def autocorrelate(m: Mollifier, resolution: int = 1024) -> CovarianceKernel:
    """V = phi * phi as a radial table on [0, 1]; V(0) = integral of phi^2."""
    d = m.dim
    gauss_u = np.polynomial.legendre.leggauss(64)
    nodes = np.linspace(0.0, 1.0, resolution + 1)
    vals = np.array([_convolution_at(m, float(r), gauss_u) for r in nodes])
    vals[-1] = 0.0
    v0 = sphere_area(d) * quad(lambda r: m(r) ** 2 * r ** (d - 1), 0.0, 0.5,
                               epsabs=QUAD_ABS_TOL, limit=200)[0]
    vals[0] = v0
    table = _dense_resample(d, 1.0, nodes, vals)
    return CovarianceKernel(dim=d, table=table, v0=v0)


def heat_kernel(d: int, t: float, x) -> float:
    """Gaussian kernel rho(t, x) = (2 pi t)^(-d/2) exp(-|x|^2 / 2t)."""
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    x = np.asarray(x, dtype=float)
    rsq = float(np.dot(x.ravel(), x.ravel())) if x.ndim else float(x) ** 2
    return (2.0 * math.pi * t) ** (-d / 2.0) * math.exp(-rsq / (2.0 * t))


def heat_kernel_time_integral(d: int, r: float, t_shift: float = 0.0,
                              quadrature: bool = False) -> float:
    """I = integral over sigma in (0, inf) of rho(2 sigma + t_shift, x), |x| = r.

    Closed form by the substitution u = |x|^2 / (2 v):  for t_shift = 0,
    I = Gamma(d/2 - 1) / (4 pi^(d/2)) * r^(2-d); with a shift the incomplete
    gamma function appears.  quadrature=True integrates numerically instead
    (used as a cross-check oracle).
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if r == 0.0:
        if t_shift <= 0.0:
            return math.inf
        # (1/2) * int_{t_shift}^inf (2 pi v)^(-d/2) dv
        a = d / 2.0 - 1.0
        return 0.5 * (2.0 * math.pi) ** (-d / 2.0) * t_shift ** (-a) / a
    if quadrature:
        def integrand(u):
            v = 1.0 / u
            return heat_kernel(d, v, np.array([r])) * v**2
        # v = 2 sigma + t_shift runs over (t_shift, inf); split at v = max(1, r^2)
        mid = max(1.0, r * r, t_shift)
        part1 = quad(lambda v: heat_kernel(d, v, np.array([r])), t_shift, mid,
                     epsabs=QUAD_ABS_TOL, limit=200)[0] if mid > t_shift else 0.0
        part2 = quad(integrand, 0.0, 1.0 / mid, epsabs=QUAD_ABS_TOL, limit=200)[0]
        return 0.5 * (part1 + part2)
    from scipy.special import gammainc
    a = d / 2.0 - 1.0
    full = math.gamma(a) / (4.0 * math.pi ** (d / 2.0)) * r ** (2 - d)
    if t_shift <= 0.0:
        return full
    # the u-substitution integral cut at u0 = r^2 / (2 t_shift)
    u0 = r * r / (2.0 * t_shift)
    return full * float(gammainc(a, u0))


@lru_cache(maxsize=8)
def green_overlap(kernel: CovarianceKernel, resolution: int = 1024) -> RadialTable:
    """q(r) = E of the total future kernel overlap of a pair at separation r.

    For the relative motion (a Brownian motion of diffusivity 2),
    q(z) = int_0^inf int rho(2s, y - z) V(y) dy ds
         = Gamma(d/2-1)/(4 pi^(d/2)) * int V(y) |y - z|^(2-d) dy,
    and Newton's theorem reduces the potential of the radial V to a pair of
    cumulative 1-d integrals.  q is a positive-definite function (its Fourier
    transform is V-hat / |k|^2 >= 0), so matrices q(|x_i - x_j|) are PSD.
    """
    d = kernel.dim
    c = math.gamma(d / 2.0 - 1.0) / (4.0 * math.pi ** (d / 2.0)) * sphere_area(d)
    # fine grid in rho for the cumulative integrals
    n = 4096
    rho = np.linspace(0.0, kernel.support_radius, n + 1)
    v = kernel(rho)
    f_inner = v * rho ** (d - 1)          # weighted by max(z, rho)^(2-d) with rho < z
    f_outer = v * rho                      # rho^(d-1) * rho^(2-d) = rho
    from scipy.integrate import cumulative_trapezoid
    inner_cum = cumulative_trapezoid(f_inner, rho, initial=0.0)
    outer_cum = cumulative_trapezoid(f_outer, rho, initial=0.0)
    outer_tail = outer_cum[-1] - outer_cum

    # table out to a generous range; beyond, q(z) ~ c_d |z|^(2-d) * int V
    z_max = 64.0
    z_nodes = np.concatenate([np.linspace(0.0, 2.0, resolution // 2 + 1),
                              np.geomspace(2.0, z_max, resolution // 2)[1:]])
    q_vals = np.empty_like(z_nodes)
    for i, z in enumerate(z_nodes):
        if z >= kernel.support_radius:
            # all kernel mass is inside radius z
            q_vals[i] = c * inner_cum[-1] * z ** (2 - d)
        elif z == 0.0:
            q_vals[i] = c * outer_tail[0]
        else:
            q_vals[i] = c * (np.interp(z, rho, inner_cum) * z ** (2 - d)
                             + outer_cum[-1] - np.interp(z, rho, outer_cum))
    interp = PchipInterpolator(z_nodes, q_vals, extrapolate=False)
    grid = np.linspace(0.0, z_max, 4 * _FAST_GRID)
    vals = interp(grid)
    vals[np.isnan(vals)] = 0.0
    # beyond z_max the exact |z|^(2-d) power law takes over
    return RadialTable(dim=d, support=z_max, grid=grid, values=vals,
                       tail_coeff=c * inner_cum[-1])


def export_radial_csv(path, table: RadialTable, value_name: str = "value") -> None:
    """Dump a radial table as CSV with columns r, value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", value_name])
        for r, v in zip(table.grid, table.values):
            writer.writerow([f"{r:.10g}", f"{v:.10g}"])
