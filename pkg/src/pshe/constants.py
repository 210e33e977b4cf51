"""Named constants of the fluctuation theory, with standard errors and cross-checks.

All the Brownian functionals reduce to the diffusivity-2 relative motion, so
the estimates ride on paths.overlap_functional_mc plus deterministic radial
quadrature.  Two independent routes to the bracket constant are kept fully
separate (different kernels of integration, nodes, and seeds) so their
agreement is a real test rather than an identity.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .kernels import CovarianceKernel, sphere_area
from .paths import is_admissible, khasminskii_margin, overlap_functional_mc

__all__ = [
    "ConstantsTable",
    "gamma_sq",
    "c0_two_forms",
    "c1",
    "c2",
    "c2_closed_form",
    "build_constants_table",
]


def _radial_nodes(n_nodes: int, r_max: float):
    u, w = np.polynomial.legendre.leggauss(n_nodes)
    r = 0.5 * r_max * (u + 1.0)
    return r, 0.5 * r_max * w


def gamma_sq(beta: float, kernel: CovarianceKernel, n_per_node: int = 8192,
             seed: int = 0, n_nodes: int = 24, s_max: float = 48.0) -> tuple[float, float]:
    """beta^2 int V(y) E_y[exp(beta^2 int_0^inf V of the relative motion)] dy.

    Radial Gauss nodes over the kernel support; the inner expectation is
    Monte Carlo with analytic tail completion.  Returns (estimate, se).
    """
    if beta == 0.0:
        return 0.0, 0.0
    if not is_admissible(beta, kernel):
        raise ValueError(f"beta = {beta} inadmissible")
    d = kernel.dim
    r, w = _radial_nodes(n_nodes, kernel.support_radius)
    starts = np.zeros((n_nodes, d))
    starts[:, 0] = r
    mean, se, _, _ = overlap_functional_mc(kernel, starts, beta, s_max,
                                           n_per_node, seed, tail=True)
    weights = sphere_area(d) * w * kernel(r) * r ** (d - 1)
    est = beta**2 * float(weights @ mean)
    err = beta**2 * math.sqrt(float((weights**2) @ (se**2)))
    return est, err


def c0_form_a(gamma_sq_est: float, gamma_sq_se: float, d: int) -> tuple[float, float]:
    """Bracket constant, first form: gamma^2 / (4 pi)^(d/2)."""
    c = (4.0 * math.pi) ** (-d / 2.0)
    return c * gamma_sq_est, c * gamma_sq_se


def c0_form_b(beta: float, kernel: CovarianceKernel, n_per_node: int = 8192,
              seed: int = 1, n_nodes: int = 24, s_max: float = 48.0) -> tuple[float, float]:
    """Bracket constant, second form:
    beta^2 (2 pi)^(-d/2) int V(sqrt2 y) E_y[exp(beta^2 int V(sqrt2 W))] dy.

    The sqrt2-scaled path from y is the relative motion from sqrt2 y, so the
    integral runs over the shrunken support r <= support/sqrt2 with its own
    node set and seed; an independent estimate of the same constant.
    """
    if beta == 0.0:
        return 0.0, 0.0
    if not is_admissible(beta, kernel):
        raise ValueError(f"beta = {beta} inadmissible")
    d = kernel.dim
    root2 = math.sqrt(2.0)
    r, w = _radial_nodes(n_nodes, kernel.support_radius / root2)
    starts = np.zeros((n_nodes, d))
    starts[:, 0] = r * root2
    mean, se, _, _ = overlap_functional_mc(kernel, starts, beta, s_max,
                                           n_per_node, seed, tail=True)
    pref = beta**2 * (2.0 * math.pi) ** (-d / 2.0) * sphere_area(d)
    weights = pref * w * kernel(r * root2) * r ** (d - 1)
    est = float(weights @ mean)
    err = math.sqrt(float((weights**2) @ (se**2)))
    return est, err


def c0_two_forms(beta: float, kernel: CovarianceKernel, n_per_node: int = 8192,
                 seed: int = 0, n_nodes: int = 24, s_max: float = 48.0):
    """Both routes to the bracket constant: ((a, se_a), (b, se_b))."""
    gs, gs_se = gamma_sq(beta, kernel, n_per_node, seed, n_nodes, s_max)
    a = c0_form_a(gs, gs_se, kernel.dim)
    b = c0_form_b(beta, kernel, n_per_node, seed + 7919, n_nodes, s_max)
    return a, b


def c1(beta: float, kernel: CovarianceKernel, n_samples: int = 65536,
       seed: int = 2, s_max: float = 64.0) -> tuple[float, float]:
    """Unit-separation covariance constant:
    E at relative start e_1 of [exp(beta^2 int_0^inf V of relative motion) - 1]."""
    if beta == 0.0:
        return 0.0, 0.0
    if not is_admissible(beta, kernel):
        raise ValueError(f"beta = {beta} inadmissible")
    d = kernel.dim
    start = np.zeros((1, d))
    start[0, 0] = 1.0
    mean, se, _, _ = overlap_functional_mc(kernel, start, beta, s_max,
                                           n_samples, seed, tail=True)
    return float(mean[0]) - 1.0, float(se[0])


def c2_closed_form(d: int) -> float:
    """E[(sqrt2/|Z|)^(d-2)] = 1/Gamma(d/2) for a standard d-dim Gaussian Z."""
    if d < 3:
        raise ValueError("d must be >= 3")
    return 1.0 / math.gamma(d / 2.0)


def c2(d: int, n_samples: int = 2_000_000, seed: int = 3) -> tuple[float, float, float]:
    """(closed form, MC estimate, MC se) for the endpoint moment constant.

    For d = 4 the summand has infinite variance (log-divergent second moment),
    so the sample-based se is finite-sample only; the closed form is exact
    either way.
    """
    cf = c2_closed_form(d)
    gen = np.random.Generator(np.random.Philox(key=seed ^ 0xC2C2))
    z = gen.standard_normal((n_samples, d))
    vals = (math.sqrt(2.0) / np.linalg.norm(z, axis=1)) ** (d - 2)
    return cf, float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


@dataclass
class ConstantsTable:
    beta: float
    dim: int
    gamma_sq: float
    gamma_sq_se: float
    gbar_sq: float
    gbar_sq_se: float
    c0_a: float
    c0_a_se: float
    c0_b: float
    c0_b_se: float
    c1: float
    c1_se: float
    c2_closed: float
    c2_mc: float
    c2_mc_se: float
    khasminskii_margin: float
    admissible: bool
    n_per_node: int
    n_c1: int
    n_c2: int
    seed: int

    def g_limit(self, tau: float) -> float:
        """Limit bracket g(tau) = (2/(d-2)) c0 (1 - tau^(-(d-2)/2)) from form A."""
        d = self.dim
        return 2.0 / (d - 2) * self.c0_a * (1.0 - tau ** (-(d - 2) / 2.0))

    def pointwise_clt_variance(self, t: float = 1.0) -> float:
        """2 c0 / (d-2) * t^(-(d-2)/2), the pointwise fluctuation variance."""
        d = self.dim
        return 2.0 / (d - 2) * self.c0_a * t ** (-(d - 2) / 2.0)

    def to_json(self, path=None) -> str:
        payload = json.dumps(asdict(self), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(payload)
        return payload

    def to_csv(self, path) -> None:
        d = asdict(self)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["name", "value"])
            for k, v in d.items():
                writer.writerow([k, v])


def build_constants_table(beta: float, kernel: CovarianceKernel, seed: int = 0,
                          n_per_node: int = 8192, n_nodes: int = 24,
                          n_c1: int = 65536, n_c2: int = 2_000_000,
                          s_max: float = 48.0) -> ConstantsTable:
    """Full table; gamma^2 and gbar^2 share one integral (exact beta^2 ratio)."""
    margin = khasminskii_margin(beta, kernel)
    gs, gs_se = gamma_sq(beta, kernel, n_per_node, seed, n_nodes, s_max)
    a, a_se = c0_form_a(gs, gs_se, kernel.dim)
    b, b_se = c0_form_b(beta, kernel, n_per_node, seed + 7919, n_nodes, s_max)
    c1_est, c1_se = c1(beta, kernel, n_c1, seed + 104729, max(64.0, s_max))
    cf, mc, mc_se = c2(kernel.dim, n_c2, seed + 1299709)
    if beta != 0.0:
        gbar, gbar_se = gs / beta**2, gs_se / beta**2
    else:
        # the shared integral with exp(0) = 1 is just the kernel mass
        gbar, gbar_se = kernel.volume_integral(), 0.0
    return ConstantsTable(
        beta=beta, dim=kernel.dim,
        gamma_sq=gs, gamma_sq_se=gs_se,
        gbar_sq=gbar, gbar_sq_se=gbar_se,
        c0_a=a, c0_a_se=a_se, c0_b=b, c0_b_se=b_se,
        c1=c1_est, c1_se=c1_se,
        c2_closed=cf, c2_mc=mc, c2_mc_se=mc_se,
        khasminskii_margin=margin,
        admissible=is_admissible(beta, kernel),
        n_per_node=n_per_node, n_c1=n_c1, n_c2=n_c2, seed=seed)
