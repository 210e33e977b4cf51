"""Path-environment coupling machinery for the gram backend.

One replica = one set of Brownian paths plus the Gaussian vector of
path-integrated environments.  The overlap accumulator walks all paths on a
graded time grid and stores, per horizon block, the pairwise overlap
increments (dense early, sparse once paths separate), the exact diagonal, and
a "retained" diagonal for the variance-reduced coupling:

  per step, a path's idiosyncratic exposure min(dt V(0), sum_j step overlap)
  is kept and the remainder dropped; the kept matrix
  (off-diagonal + clipped diagonal) stays PSD because each step contributes
  W_off + diag(min(rowsum, dt V0)), diagonally dominant after clipping.

Increment vectors are drawn blockwise (independent across blocks, which is
exactly the nested-horizon coupling), by dense Cholesky with the escalating
jitter ladder or by a Lanczos square root for large sparse blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .environment import substream
from .kernels import CovarianceKernel, RadialTable, green_overlap

__all__ = [
    "PathGroup",
    "BlockMatrix",
    "EngineResult",
    "engine_time_grid",
    "run_pair_engine",
    "tail_block",
    "draw_increment",
    "block_dense_cov",
    "lanczos_sqrt_apply",
]


@dataclass(frozen=True, eq=False)
class PathGroup:
    start: np.ndarray
    n: int
    birth: float = 0.0
    label: str = ""


class BlockMatrix:
    """Pairwise overlap increment over one horizon block (t_lo, t_hi]."""

    def __init__(self, t_lo, t_hi, n, v0, alive_time, retained_diag,
                 dense=None, coo=None):
        self.t_lo = float(t_lo)
        self.t_hi = float(t_hi)
        self.n = int(n)
        self.v0 = float(v0)
        self.alive_time = alive_time            # (n,) time alive in block
        self.retained_diag = retained_diag      # (n,) kept idiosyncratic overlap
        self.dense = dense                      # (n, n) off-diagonal, zero diag
        self.coo = coo                          # (i, j, v) with i < j
        self._chol = {}
        self._csr = None

    def diag(self, mode: str) -> np.ndarray:
        if mode == "full":
            return self.alive_time * self.v0
        if mode == "reduced":
            return self.retained_diag
        raise ValueError(f"unknown coupling mode {mode!r}")

    def offdiag_qf(self, wp: np.ndarray, wq: np.ndarray) -> float:
        """wp^T O_off wq over the off-diagonal overlap."""
        if self.dense is not None:
            return float(wp @ (self.dense @ wq))
        i, j, v = self.coo
        return float(np.sum(v * (wp[i] * wq[j] + wp[j] * wq[i])))

    def offdiag_matvec(self, x: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return self.dense @ x
        if self._csr is None:
            from scipy.sparse import coo_matrix
            i, j, v = self.coo
            ii = np.concatenate([i, j])
            jj = np.concatenate([j, i])
            vv = np.concatenate([v, v])
            self._csr = coo_matrix((vv, (ii, jj)), shape=(self.n, self.n)).tocsr()
        return self._csr @ x

    def nnz_pairs(self) -> int:
        if self.dense is not None:
            return int(np.count_nonzero(self.dense) // 2)
        return len(self.coo[0])


@dataclass(eq=False)
class EngineResult:
    kernel: CovarianceKernel
    groups: tuple
    births: np.ndarray
    starts: np.ndarray
    anchors: np.ndarray
    blocks: list
    snapshots: dict
    group_slices: list
    n: int
    dim: int

    def blocks_between(self, t_lo: float, t_hi: float) -> list:
        return [b for b in self.blocks if b.t_lo >= t_lo - 1e-12 and b.t_hi <= t_hi + 1e-12]


def engine_time_grid(anchors, births, dt0: float, grade: float,
                     dt_cap: float) -> np.ndarray:
    """Graded grid hitting every anchor; grading restarts at each birth time.

    Step size grows like (time since the most recent birth) / grade, clipped
    to [dt0, dt_cap]: freshly started groups always get a finely resolved
    overlap onset.
    """
    anchors = sorted(set(float(a) for a in anchors) | set(float(b) for b in births if b > 0))
    bs = sorted(set([0.0] + [float(b) for b in births]))
    ts = [0.0]
    t = 0.0
    for a in anchors:
        while t < a - 1e-12:
            origin = max(b for b in bs if b <= t + 1e-12)
            dt = min(dt_cap, max(dt0, (t - origin) / grade)) if grade > 0 else dt0
            t = min(t + dt, a)
            ts.append(t)
        t = a
        ts[-1] = a
    return np.array(ts)


class _BlockAccumulator:
    def __init__(self, n, v0, t_lo):
        self.t_lo = t_lo
        self.n = n
        self.v0 = v0
        self.dense = None
        self.chunks_i = []
        self.chunks_j = []
        self.chunks_v = []
        self.retained = np.zeros(n)
        self.alive_time = np.zeros(n)

    def ensure_dense(self):
        if self.dense is None:
            self.dense = np.zeros((self.n, self.n))

    def add_chunk(self, i, j, v):
        keep = v > 0.0
        if not np.any(keep):
            return
        self.chunks_i.append(i[keep].copy())
        self.chunks_j.append(j[keep].copy())
        self.chunks_v.append(v[keep].copy())

    def close(self, t_hi) -> BlockMatrix:
        if self.dense is not None:
            if self.chunks_i:
                ii = np.concatenate(self.chunks_i)
                jj = np.concatenate(self.chunks_j)
                vv = np.concatenate(self.chunks_v)
                np.add.at(self.dense, (ii, jj), vv)
                np.add.at(self.dense, (jj, ii), vv)
            return BlockMatrix(self.t_lo, t_hi, self.n, self.v0,
                               self.alive_time, self.retained, dense=self.dense)
        if self.chunks_i:
            ii = np.concatenate(self.chunks_i)
            jj = np.concatenate(self.chunks_j)
            vv = np.concatenate(self.chunks_v)
            keys = ii.astype(np.int64) * self.n + jj
            uniq, inv = np.unique(keys, return_inverse=True)
            v = np.bincount(inv, weights=vv)
            i = (uniq // self.n).astype(np.int64)
            j = (uniq % self.n).astype(np.int64)
        else:
            i = np.empty(0, dtype=np.int64)
            j = np.empty(0, dtype=np.int64)
            v = np.empty(0)
        return BlockMatrix(self.t_lo, t_hi, self.n, self.v0,
                           self.alive_time, self.retained, coo=(i, j, v))


def run_pair_engine(kernel: CovarianceKernel, groups, anchors, seed: int,
                    dt0: float = 1.0 / 64, grade: float = 64.0,
                    dt_cap: float = 0.25, scan_pad: float = 1.5,
                    dense_frac: float = 0.05) -> EngineResult:
    """Walk all paths once, accumulating per-block overlap structures.

    Groups must be ordered by birth time; pairs contribute only while both
    members are alive.  Snapshot positions are stored at every anchor.
    """
    groups = tuple(groups)
    births_g = [g.birth for g in groups]
    if any(births_g[k] > births_g[k + 1] for k in range(len(groups) - 1)):
        raise ValueError("groups must be ordered by birth time")
    d = kernel.dim
    n = sum(g.n for g in groups)
    v0 = kernel.v0
    starts = np.concatenate([np.broadcast_to(np.asarray(g.start, dtype=float), (g.n, d))
                             for g in groups])
    births = np.concatenate([np.full(g.n, g.birth) for g in groups])
    slices = []
    ofs = 0
    for g in groups:
        slices.append(slice(ofs, ofs + g.n))
        ofs += g.n
    anchors = np.array(sorted(set(float(a) for a in anchors)
                              | set(b for b in births_g if b > 0)))
    if anchors[0] <= 0:
        raise ValueError("anchors must be positive")
    support = kernel.support_radius
    times = engine_time_grid(anchors, births_g, dt0, grade, dt_cap)
    gen = np.random.Generator(np.random.Philox(key=int(substream(seed, 0xE6))))

    pos = starts.copy()
    n_alive = int(np.sum(births <= 0.0))
    blocks = []
    snapshots = {}
    acc = _BlockAccumulator(n, v0, 0.0)
    anchor_ptr = 0

    # pair-list state (None means dense sweeping)
    pair_i = pair_j = pair_vprev = None
    dense_vprev = None
    scan_pos = None
    r_list = support + scan_pad

    def rescan(force_dense=None):
        nonlocal pair_i, pair_j, pair_vprev, dense_vprev, scan_pos
        m = n_alive
        p = pos[:m]
        max_pairs = m * (m - 1) // 2
        if max_pairs == 0:
            pair_i = np.empty(0, dtype=np.int64)
            pair_j = np.empty(0, dtype=np.int64)
            pair_vprev = np.empty(0)
            dense_vprev = None
            scan_pos = pos.copy()
            return
        tree = cKDTree(p)
        pairs = tree.query_pairs(r_list, output_type="ndarray")
        frac = len(pairs) / max_pairs
        dense = frac > dense_frac if force_dense is None else force_dense
        if dense and m <= 4500:
            dense_vprev = _masked_pair_matrix(p, kernel)
            pair_i = pair_j = pair_vprev = None
            acc.ensure_dense()
        else:
            if len(pairs):
                pair_i = pairs[:, 0].astype(np.int64)
                pair_j = pairs[:, 1].astype(np.int64)
            else:
                pair_i = np.empty(0, dtype=np.int64)
                pair_j = np.empty(0, dtype=np.int64)
            diff = p[pair_i] - p[pair_j]
            pair_vprev = kernel.table.eval_masked(np.einsum("ij,ij->i", diff, diff))
            dense_vprev = None
        scan_pos = pos.copy()

    rescan()
    snapshots[0.0] = pos.copy()
    pair_acc = np.zeros(len(pair_i)) if pair_i is not None else None
    drift_sq = 0.0

    for k in range(1, len(times)):
        t_prev, t = times[k - 1], times[k]
        dt = t - t_prev
        step = gen.standard_normal((n, d)) * math.sqrt(dt)
        if n_alive:
            pos[:n_alive] += step[:n_alive]
        acc.alive_time[:n_alive] += dt

        if dense_vprev is not None:
            m = n_alive
            vm = _masked_pair_matrix(pos[:m], kernel)
            contrib = (0.5 * dt) * (dense_vprev + vm)
            acc.dense[:m, :m] += contrib
            rowsum = contrib.sum(axis=1)
            acc.retained[:m] += np.minimum(rowsum, dt * v0)
            dense_vprev = vm
            if k % 16 == 0:
                frac = np.count_nonzero(vm) / max(m * (m - 1), 1)
                if frac < dense_frac * 0.5:
                    rescan(force_dense=False)
                    pair_acc = np.zeros(len(pair_i))
                    drift_sq = 0.0
        else:
            if len(pair_i):
                diff = pos[pair_i] - pos[pair_j]
                v = kernel.table.eval_masked(np.einsum("ij,ij->i", diff, diff))
                contrib = (0.5 * dt) * (pair_vprev + v)
                pair_acc += contrib
                rowsum = (np.bincount(pair_i, weights=contrib, minlength=n)
                          + np.bincount(pair_j, weights=contrib, minlength=n))
                acc.retained += np.minimum(rowsum, dt * v0)
                pair_vprev = v
            # drift bound: rebuild the candidate list before anything can sneak in
            drift_sq = max(drift_sq, float(np.max(
                np.einsum("ij,ij->i", pos[:n_alive] - scan_pos[:n_alive],
                          pos[:n_alive] - scan_pos[:n_alive])))) if n_alive else 0.0
            if math.sqrt(drift_sq) > scan_pad / 2.0:
                acc.add_chunk(pair_i, pair_j, pair_acc)
                rescan()
                pair_acc = np.zeros(len(pair_i)) if pair_i is not None else None
                drift_sq = 0.0

        while anchor_ptr < len(anchors) and abs(t - anchors[anchor_ptr]) < 1e-12:
            a = anchors[anchor_ptr]
            if pair_i is not None and pair_acc is not None and len(pair_i):
                acc.add_chunk(pair_i, pair_j, pair_acc)
            blocks.append(acc.close(a))
            snapshots[a] = pos.copy()
            # births exactly at this anchor
            newborn = np.abs(births - a) < 1e-12
            if np.any(newborn):
                n_alive = int(np.sum(births <= a + 1e-12))
            acc = _BlockAccumulator(n, v0, a)
            rescan()
            pair_acc = np.zeros(len(pair_i)) if pair_i is not None else None
            drift_sq = 0.0
            anchor_ptr += 1

    return EngineResult(kernel=kernel, groups=groups, births=births, starts=starts,
                        anchors=anchors, blocks=blocks, snapshots=snapshots,
                        group_slices=slices, n=n, dim=d)


def _masked_pair_matrix(p: np.ndarray, kernel: CovarianceKernel) -> np.ndarray:
    g = p @ p.T
    sq = np.einsum("ii->i", g).copy()
    dsq = sq[:, None] + sq[None, :] - 2.0 * g
    np.maximum(dsq, 0.0, out=dsq)
    out = kernel.table.eval_masked(dsq)
    np.fill_diagonal(out, 0.0)
    return out


def tail_block(positions: np.ndarray, qtable: RadialTable, t_at: float) -> BlockMatrix:
    """Analytic continuation block: conditional-mean overlap of the infinite tail.

    Off-diagonal entries q(|x_i - x_j|), diagonal q(0); q is a positive
    definite function so the block is PSD up to interpolation error.
    """
    n = len(positions)
    g = positions @ positions.T
    sq = np.einsum("ii->i", g).copy()
    dsq = sq[:, None] + sq[None, :] - 2.0 * g
    np.maximum(dsq, 0.0, out=dsq)
    dense = np.asarray(qtable(np.sqrt(dsq)))
    np.fill_diagonal(dense, 0.0)
    q0 = float(qtable(0.0))
    # both modes keep the small q(0) diagonal in the tail
    return BlockMatrix(t_at, math.inf, n, q0, alive_time=np.ones(n),
                       retained_diag=np.full(n, q0), dense=dense)


def block_dense_cov(block: BlockMatrix, beta: float, mode: str) -> np.ndarray:
    """Full covariance matrix beta^2 (O_off + diag) of one block (dense)."""
    n = block.n
    if block.dense is not None:
        cov = block.dense.copy()
    else:
        i, j, v = block.coo
        cov = np.zeros((n, n))
        cov[i, j] = v
        cov[j, i] = v
    cov[np.arange(n), np.arange(n)] = block.diag(mode)
    return beta**2 * cov


def _cholesky_jitter(cov: np.ndarray):
    n = cov.shape[0]
    base = max(float(np.trace(cov)) / n, 1e-300)
    for level in [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6]:
        try:
            return np.linalg.cholesky(cov + (level * base) * np.eye(n))
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError("block covariance indefinite beyond jitter budget")


def lanczos_sqrt_apply(matvec, z: np.ndarray, m: int = 96,
                       shift: float = 0.0) -> np.ndarray:
    """Approximate (A + shift I)^(1/2) z by Lanczos with full reorthogonalization."""
    nrm = float(np.linalg.norm(z))
    if nrm == 0.0:
        return np.zeros_like(z)
    n = len(z)
    m = min(m, n)
    Q = np.empty((m, n))
    alphas = np.empty(m)
    betas = np.empty(m)
    q = z / nrm
    Q[0] = q
    q_prev = np.zeros_like(q)
    beta_prev = 0.0
    used = m
    for jj in range(m):
        w = matvec(q)
        if shift:
            w = w + shift * q
        a = float(q @ w)
        alphas[jj] = a
        w = w - a * q - beta_prev * q_prev
        # full reorthogonalization keeps the basis usable at high m
        w -= Q[:jj + 1].T @ (Q[:jj + 1] @ w)
        b = float(np.linalg.norm(w))
        betas[jj] = b
        if b < 1e-13 or jj == m - 1:
            used = jj + 1
            break
        q_prev = q
        q = w / b
        Q[jj + 1] = q
        beta_prev = b
    from scipy.linalg import eigh_tridiagonal
    evals, evecs = eigh_tridiagonal(alphas[:used], betas[:used - 1])
    f = evecs @ (np.sqrt(np.clip(evals, 0.0, None)) * evecs[0, :])
    return nrm * (Q[:used].T @ f)


def draw_increment(block: BlockMatrix, beta: float, mode: str,
                   gen: np.random.Generator, dense_limit: int = 1536) -> np.ndarray:
    """One Gaussian increment vector with covariance beta^2 (O_off + diag(mode)).

    Dead paths (zero alive time) get exactly zero.  Dense Cholesky when the
    block is small or stored dense; Lanczos square root otherwise.  The
    Cholesky factor is cached on the block per mode.
    """
    n = block.n
    if beta == 0.0:
        return np.zeros(n)
    z = gen.standard_normal(n)
    if block.dense is not None or n <= dense_limit:
        key = mode
        if key not in block._chol:
            block._chol[key] = _cholesky_jitter(block_dense_cov(block, 1.0, mode))
        out = beta * (block._chol[key] @ z)
    else:
        diag = block.diag(mode)
        mv = lambda x: block.offdiag_matvec(x) + diag * x
        shift = 1e-9 * float(diag.max() if len(diag) else 0.0)
        out = beta * lanczos_sqrt_apply(mv, z, shift=shift)
    dead = block.alive_time <= 0.0
    if np.any(dead):
        out[dead] = 0.0
    return out
