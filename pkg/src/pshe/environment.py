"""Discretized space-time white noise with deterministic counter-based generation.

Every random number is a pure function of (seed, stream tags, counter), so any
slab or walker increment can be regenerated in any order on any worker without
storing history.  Gaussians come from the inverse CDF of a SplitMix64-style
counter hash, which keeps reproducibility independent of batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = [
    "LatticeSpec",
    "NoiseSlab",
    "substream",
    "counter_uniform",
    "counter_gauss",
    "noise_slab",
    "slab_values",
    "mollified_noise_at",
    "lattice_stencil",
    "dump_slab_csv",
]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(z):
    # uint64 arithmetic is modular by design; silence numpy's scalar warnings
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64)
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def substream(seed: int, *tags: int) -> np.uint64:
    """Derive an independent stream key from a seed and integer tags."""
    with np.errstate(over="ignore"):
        h = _mix64(np.uint64(seed & (2**64 - 1)) ^ _GOLDEN)
        for t in tags:
            h = _mix64(h + _GOLDEN * np.uint64(t & (2**64 - 1)))
    return np.uint64(h)


def counter_uniform(key, counter) -> np.ndarray:
    """Uniform(0,1) keyed by (key, counter); strictly inside the open interval.

    key may be a scalar or an array broadcastable against counter.
    """
    with np.errstate(over="ignore"):
        c = np.asarray(counter, dtype=np.uint64)
        h = _mix64(np.asarray(key, dtype=np.uint64) + _GOLDEN * c)
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


def counter_gauss(key: np.uint64, counter) -> np.ndarray:
    """Standard Gaussians via inverse CDF of the counter stream."""
    return ndtri(counter_uniform(key, counter))


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Periodic box lattice for the noise field.

    Cells are cubes of side dx centered at (i + 1/2) dx - box/2; the box is
    centered at the origin.  Noise cells at time slice k are iid
    N(0, 1/(dt dx^d)).
    """

    dim: int
    dx: float
    box: float
    dt: float
    horizon: float
    mollifier_scale: float = 1.0

    def __post_init__(self):
        n = self.box / self.dx
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(f"box/dx = {n} is not an integer")
        m = self.horizon / self.dt
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ValueError(f"horizon/dt = {m} is not an integer")
        if self.dx > self.mollifier_scale / 4.0 + 1e-12:
            raise ValueError(
                f"dx = {self.dx} under-resolves the mollifier scale "
                f"{self.mollifier_scale} (need dx <= scale/4)")

    @property
    def n_side(self) -> int:
        return int(round(self.box / self.dx))

    @property
    def n_cells(self) -> int:
        return self.n_side ** self.dim

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def cell_sigma(self) -> float:
        return 1.0 / math.sqrt(self.dt * self.dx ** self.dim)

    def cell_centers_1d(self) -> np.ndarray:
        return (np.arange(self.n_side) + 0.5) * self.dx - self.box / 2.0


@dataclass(frozen=True, eq=False)
class NoiseSlab:
    """One time slice of the white-noise field over the full lattice."""

    spec: LatticeSpec
    k: int
    values: np.ndarray  # shape (n_side,) * dim


def _slab_key(seed: int, k: int) -> np.uint64:
    return substream(seed, 0xE1, k)


def slab_values(spec: LatticeSpec, k: int, seed: int, flat_cells) -> np.ndarray:
    """Noise values of slab k at the given flat cell indices (lazy access)."""
    if not 0 <= k < spec.n_steps:
        raise ValueError(f"slab index {k} outside [0, {spec.n_steps})")
    key = _slab_key(seed, k)
    return spec.cell_sigma * counter_gauss(key, flat_cells)


def noise_slab(spec: LatticeSpec, k: int, seed: int) -> NoiseSlab:
    """Materialize a full slab (test/debug scale; memory is one slab)."""
    if spec.n_cells > 2**25:
        raise ValueError(f"slab of {spec.n_cells} cells is too large to materialize")
    vals = slab_values(spec, k, seed, np.arange(spec.n_cells, dtype=np.uint64))
    return NoiseSlab(spec=spec, k=k, values=vals.reshape((spec.n_side,) * spec.dim))


def lattice_stencil(dx: float, radius: float, dim: int) -> np.ndarray:
    """Integer cell offsets that can intersect a ball of the given radius."""
    k0 = int(math.ceil(radius / dx + 0.5 * math.sqrt(dim)))
    rng = np.arange(-k0, k0 + 1)
    grids = np.meshgrid(*([rng] * dim), indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    # keep offsets whose cell center can be within radius of some point of the cell
    keep = np.linalg.norm(offs, axis=1) * dx <= radius + dx * math.sqrt(dim) / 2.0
    return offs[keep].astype(np.int64)


def _stencil_eval(spec: LatticeSpec, mollifier, eps: float, x: np.ndarray):
    """Cells near each point and the mollifier weights phi_eps(x - center) dx^d.

    Returns (flat_cells, weights) with shape (npts, n_stencil); weights are
    zero for cells outside the support.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = spec.dim
    offs = lattice_stencil(spec.dx, 0.5 * eps, d)
    # fractional index of each point relative to cell centers
    frac = (x + spec.box / 2.0) / spec.dx - 0.5
    base = np.floor(frac + 0.5).astype(np.int64)
    idx = base[:, None, :] + offs[None, :, :]
    centers = (idx + 0.5) * spec.dx - spec.box / 2.0
    diff = centers - x[:, None, :]
    dist = np.sqrt(np.einsum("pod,pod->po", diff, diff))
    w = mollifier.scaled(dist, eps) * spec.dx ** d
    n = spec.n_side
    idx_mod = np.mod(idx, n)
    flat = idx_mod[..., 0]
    for a in range(1, d):
        flat = flat * n + idx_mod[..., a]
    return flat.astype(np.uint64), w


def mollified_noise_at(slab: NoiseSlab, mollifier, eps: float, x) -> np.ndarray:
    """(phi_eps * xi)(x) for one or more points, from a materialized slab.

    Requires eps to be resolved by the lattice: eps >= 4 dx.
    """
    spec = slab.spec
    if eps < 4.0 * spec.dx - 1e-12:
        raise ValueError(f"eps = {eps} under-resolved by dx = {spec.dx}")
    flat, w = _stencil_eval(spec, mollifier, eps, x)
    vals = slab.values.ravel()[flat.astype(np.int64)]
    out = np.einsum("po,po->p", w, vals)
    return out if np.asarray(x).ndim > 1 else float(out[0])


def lattice_variance_at(spec: LatticeSpec, mollifier, eps: float, x) -> np.ndarray:
    """Exact one-step variance dt * Var((phi_eps * xi)(x)): sum of squared weights / dt.

    This is the lattice counterpart of eps^-d V(0); it depends weakly on the
    sub-cell position of x and is used as the exact per-walker compensator.
    """
    _, w = _stencil_eval(spec, mollifier, eps, x)
    v = np.einsum("po,po->p", w, w) / (spec.dx ** spec.dim)
    return v if np.asarray(x).ndim > 1 else float(v[0])


def dump_slab_csv(slab: NoiseSlab, path) -> None:
    """Debug dump of one slab as CSV rows (cell indices, value)."""
    spec = slab.spec
    n = spec.n_side
    with open(path, "w") as fh:
        fh.write(",".join(f"i{a}" for a in range(spec.dim)) + ",value\n")
        it = np.ndindex(*slab.values.shape)
        flatvals = slab.values.ravel()
        for j, idx in enumerate(it):
            fh.write(",".join(str(i) for i in idx) + f",{flatvals[j]:.10g}\n")
