"""Reference implementations of the limiting Gaussian fields.

Three covariance operators:
  - the heat-evolved free-field limit ("smoothed" tag H): amplitude^2 *
    int_0^inf rho(2 sigma + t + s, x - y) d sigma,
  - the additive-noise flat-start limit (Hbar): amplitude^2 *
    int_0^{min(t,s)} rho(t + s - 2u, x - y) du,
  - their independent sum (Hst), which is stationary in time exactly when the
    two amplitudes agree.

Pointwise variances of Hbar (and hence Hst) diverge at coincident space
points for d >= 3 (the additive-noise field is distribution valued); the
operators are finite off the diagonal, which is all the bookkeeping needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .environment import substream
from .kernels import heat_kernel, heat_kernel_time_integral

__all__ = [
    "cov_H",
    "cov_Hbar",
    "cov_Hst",
    "GaussianLimitSpec",
    "build_limit_spec",
    "sample_limit",
    "heat_evolution_residual",
    "gff_prefactor_ratio",
]

_QUAD_TOL = 1e-10


def _sep(x, y) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


def cov_H(d: int, p, q, amp_sq: float) -> float:
    """Covariance of the heat-evolved free-field limit between points p=(t,x), q=(s,y)."""
    t, x = p
    s, y = q
    if t < 0 or s < 0:
        raise ValueError("times must be nonnegative")
    r = _sep(x, y)
    if r == 0.0 and t + s == 0.0:
        return math.inf
    return amp_sq * heat_kernel_time_integral(d, r, t_shift=t + s)


def cov_Hbar(d: int, p, q, amp_sq: float) -> float:
    """Covariance of the flat-start additive-noise limit; +inf at coincident points."""
    t, x = p
    s, y = q
    if t < 0 or s < 0:
        raise ValueError("times must be nonnegative")
    lo = min(t, s)
    if lo == 0.0:
        return 0.0
    r = _sep(x, y)
    if r == 0.0:
        return math.inf
    val, err = quad(lambda u: heat_kernel(d, t + s - 2.0 * u, np.array([r])),
                    0.0, lo, epsabs=_QUAD_TOL, limit=400)
    if not math.isfinite(val) or (abs(val) > 1e-12 and err > 1e-6 * abs(val) + 1e-12):
        raise ArithmeticError(f"quadrature failed to converge (value {val}, err {err})")
    return amp_sq * val


def cov_Hst(d: int, p, q, amp_sq: float) -> float:
    """Stationary-field covariance: cov_H + cov_Hbar with a common amplitude.

    With the common amplitude this collapses (exactly, by splitting the time
    integral) to amp_sq * int_0^inf rho(2 sigma + |t - s|, x - y) d sigma,
    so equal-time marginals do not depend on t.
    """
    return cov_H(d, p, q, amp_sq) + cov_Hbar(d, p, q, amp_sq)


@dataclass(frozen=True, eq=False)
class GaussianLimitSpec:
    """Finite point set plus the covariance matrix of one limit field."""

    field_tag: str            # "H" | "Hbar" | "Hst"
    dim: int
    points: tuple             # ((t, x), ...)
    amp_sq: float
    cov: np.ndarray


def build_limit_spec(field_tag: str, d: int, points, amp_sq: float) -> GaussianLimitSpec:
    fns = {"H": cov_H, "Hbar": cov_Hbar, "Hst": cov_Hst}
    if field_tag not in fns:
        raise ValueError(f"unknown field tag {field_tag!r}")
    pts = tuple((float(t), np.asarray(x, dtype=float)) for t, x in points)
    n = len(pts)
    cov = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            cov[i, j] = cov[j, i] = fns[field_tag](d, pts[i], pts[j], amp_sq)
    if not np.all(np.isfinite(cov)):
        raise ValueError(
            f"{field_tag} covariance is infinite at coincident points; "
            "use distinct spatial points (the additive-noise field is "
            "distribution valued pointwise)")
    return GaussianLimitSpec(field_tag=field_tag, dim=d, points=pts,
                             amp_sq=amp_sq, cov=cov)


def _cholesky_with_jitter(cov: np.ndarray):
    """Cholesky with the escalating diagonal jitter ladder; error beyond 1e-6 tr/n."""
    n = cov.shape[0]
    base = np.trace(cov) / n
    jitter = 0.0
    for level in [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6]:
        jitter = level * base
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(n)), jitter
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError(
        "covariance not positive semidefinite within the jitter budget")


def sample_limit(spec: GaussianLimitSpec, n: int, seed: int) -> np.ndarray:
    """n joint centered Gaussian samples with the spec covariance (Cholesky)."""
    chol, _ = _cholesky_with_jitter(spec.cov)
    gen = np.random.Generator(np.random.Philox(key=int(substream(seed, 0x11D))))
    z = gen.standard_normal((n, spec.cov.shape[0]))
    return z @ chol.T


def heat_evolution_residual(d: int, t: float, r: float, amp_sq: float,
                            rho_max: float = 60.0) -> float:
    """|Cov(H(t,x), H(0,y)) - int rho(t, x-z) Cov(H(0,z), H(0,y)) dz| at |x-y| = r.

    Checks the deterministic heat evolution of the limit field at covariance
    level by an independent d=3 spherical convolution quadrature.
    """
    if d != 3:
        raise NotImplementedError("evolution check implemented for d = 3")
    lhs = cov_H(d, (t, np.array([r, 0.0, 0.0])), (0.0, np.zeros(3)), amp_sq)

    def g(rho):
        return amp_sq * heat_kernel_time_integral(d, rho)

    def angular(rho):
        # int over the unit sphere of rho(t, |r e1 - rho w|) dS(w), closed form in d=3
        if rho == 0.0:
            return 4.0 * math.pi * heat_kernel(3, t, np.array([r]))
        a = (2.0 * math.pi * t) ** -1.5 * math.exp(-(r * r + rho * rho) / (2 * t))
        return 4.0 * math.pi * a * (t / (r * rho)) * math.sinh(r * rho / t)

    val, _ = quad(lambda rho: g(rho) * rho**2 * angular(rho), 0.0, rho_max,
                  epsabs=1e-10, limit=400)
    return abs(lhs - val)


def gff_prefactor_ratio(d: int) -> float:
    """Ratio of the time-integral prefactor to the printed closed-form prefactor.

    The flat-field covariance at time zero follows the power law
    coeff * |x - y|^(2-d) with coeff = Gamma(d/2-1)/(4 pi^(d/2)) from the
    integral; the commonly printed closed form carries Gamma(d/2-1)/pi^(d/2).
    Reported as a diagnostic; the integral form is authoritative here.
    """
    integral_coeff = math.gamma(d / 2.0 - 1.0) / (4.0 * math.pi ** (d / 2.0))
    printed_coeff = math.gamma(d / 2.0 - 1.0) / (math.pi ** (d / 2.0))
    return integral_coeff / printed_coeff
