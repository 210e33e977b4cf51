"""Partition-function estimators and fluctuation statistics, two backends.

gram backend: never materializes the noise field; the path-integrated
environment is drawn exactly in law as a Gaussian vector with covariance
beta^2 x (overlap Gram), nested across horizons so one replica carries one
coupled martingale trajectory.

field backend: walkers accumulate the lattice-mollified white noise along
their trajectories, sharing slabs within a replica (common environment).  Its
per-walker compensator uses the exact lattice variance at the walker position,
so the mean-one martingale property holds at any resolution.

The fluctuation machinery reports both drawn samples and conditional bracket
quadratic forms; the latter estimate limit variances and covariances free of
the per-path estimator noise, which is tracked exactly alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import environment as env
from .coupling import (BlockMatrix, EngineResult, PathGroup, draw_increment,
                       run_pair_engine, tail_block)
from .environment import LatticeSpec, substream
from .kernels import CovarianceKernel, Mollifier, green_overlap
from .paths import is_admissible

__all__ = [
    "PolymerConfig",
    "PolymerSample",
    "sample_polymer_gram",
    "sample_polymer_field",
    "bracket_derivative",
    "BracketResult",
    "run_bracket",
    "FluctuationPoint",
    "FluctuationResult",
    "fluctuation_run",
    "g_process",
    "GProcessResult",
    "averaged_fluctuation",
]

_R_ENGINE = 0x52
_R_DRAW = 0x53
_R_WALK = 0x54


@dataclass(frozen=True)
class PolymerConfig:
    dim: int
    beta: float
    n_paths: int
    horizons: tuple
    starts: tuple = ((0.0, 0.0, 0.0),)
    backend: str = "gram"
    coupling: str = "full"
    seed: int = 0
    dt0: float = 1.0 / 64
    grade: float = 64.0
    dt_cap: float = 0.25

    def __post_init__(self):
        hs = tuple(float(h) for h in self.horizons)
        if any(b >= a for b, a in zip(hs, hs[1:])) or not hs or hs[0] <= 0:
            raise ValueError("horizons must be positive and strictly increasing")
        if self.n_paths < 1:
            raise ValueError("need at least one path per start")
        if self.backend not in ("gram", "field"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.coupling not in ("full", "reduced"):
            raise ValueError(f"unknown coupling {self.coupling!r}")
        object.__setattr__(self, "horizons", hs)
        object.__setattr__(self, "starts",
                           tuple(tuple(float(c) for c in s) for s in np.atleast_2d(self.starts)))


@dataclass(eq=False)
class PolymerSample:
    horizons: np.ndarray
    starts: np.ndarray
    z: np.ndarray          # (n_replicas, n_horizons, n_starts)
    log_z: np.ndarray
    backend: str
    diagnostics: dict = field(default_factory=dict)


def _check_admissible(beta: float, kernel: CovarianceKernel):
    if beta != 0.0 and not is_admissible(beta, kernel):
        raise ValueError(f"beta = {beta} fails the admissibility margin")


def _replica_grams(kernel, cfg: PolymerConfig, rep: int):
    groups = [PathGroup(start=np.asarray(s, dtype=float), n=cfg.n_paths, label=str(m))
              for m, s in enumerate(cfg.starts)]
    res = run_pair_engine(kernel, groups, cfg.horizons,
                          seed=int(substream(cfg.seed, _R_ENGINE, rep)),
                          dt0=cfg.dt0, grade=cfg.grade, dt_cap=cfg.dt_cap)
    return res


def replica_seed_streams(seed: int, rep: int):
    """(engine seed, draw generator) for one replica index; used by all runners."""
    gen = np.random.Generator(np.random.Philox(key=int(substream(seed, _R_DRAW, rep))))
    return int(substream(seed, _R_ENGINE, rep)), gen


def _weights_along(res: EngineResult, beta: float, mode: str,
                   gen: np.random.Generator, up_to: float):
    """Cumulative environment G and its exact per-path variance up to a time."""
    n = res.n
    g_cum = np.zeros(n)
    var_cum = np.zeros(n)
    for blk in res.blocks:
        if blk.t_hi > up_to + 1e-12:
            break
        g_cum += draw_increment(blk, beta, mode, gen)
        var_cum += beta**2 * blk.diag(mode)
    return g_cum, var_cum


def sample_polymer_gram(kernel: CovarianceKernel, cfg: PolymerConfig,
                        n_replicas: int, rep_offset: int = 0) -> PolymerSample:
    """Partition functions at every (horizon, start) from the Gram coupling.

    Estimator per start: mean over that start's paths of
    exp(G_i(T) - Var(G_i(T))/2); under the full coupling Var = beta^2 T V(0),
    matching the textbook normalizer exactly.
    """
    _check_admissible(cfg.beta, kernel)
    ks = len(cfg.horizons)
    ms = len(cfg.starts)
    z = np.empty((n_replicas, ks, ms))
    ess = np.empty((n_replicas, ks, ms))
    for rr in range(n_replicas):
        rep = rr + rep_offset
        res = _replica_grams(kernel, cfg, rep)
        gen = np.random.Generator(np.random.Philox(
            key=int(substream(cfg.seed, _R_DRAW, rep))))
        g_cum = np.zeros(res.n)
        var_cum = np.zeros(res.n)
        bi = 0
        for kk, t in enumerate(cfg.horizons):
            while bi < len(res.blocks) and res.blocks[bi].t_hi <= t + 1e-12:
                blk = res.blocks[bi]
                g_cum += draw_increment(blk, cfg.beta, cfg.coupling, gen)
                var_cum += cfg.beta**2 * blk.diag(cfg.coupling)
                bi += 1
            u = np.exp(g_cum - 0.5 * var_cum)
            for mm, sl in enumerate(res.group_slices):
                ug = u[sl]
                z[rr, kk, mm] = ug.mean()
                ess[rr, kk, mm] = ug.sum()**2 / max((ug**2).sum(), 1e-300)
    return PolymerSample(horizons=np.array(cfg.horizons),
                         starts=np.array(cfg.starts, dtype=float),
                         z=z, log_z=np.log(z), backend="gram",
                         diagnostics={"ess": ess, "coupling": cfg.coupling})


def sample_polymer_field(mollifier: Mollifier, kernel: CovarianceKernel,
                         cfg: PolymerConfig, lattice: LatticeSpec,
                         n_replicas: int, rep_chunk: int = 256,
                         wrap_threshold: float = 1e-3) -> PolymerSample:
    """Direct lattice simulation: walkers share noise slabs within a replica.

    The exponent accumulates beta (phi * xi)(s, W_s) dt with the exact
    per-position lattice compensator; eps = 1 (the equation at mollification
    scale one).  Walkers across starts share slabs; replicas are independent.
    """
    _check_admissible(cfg.beta, kernel)
    d = cfg.dim
    dt = lattice.dt
    steps_per_h = []
    for h in cfg.horizons:
        sh = h / dt
        if abs(sh - round(sh)) > 1e-9 * max(1.0, sh):
            raise ValueError(f"horizon {h} not on the lattice dt grid")
        steps_per_h.append(int(round(sh)))
    n_steps = steps_per_h[-1]
    starts = np.array(cfg.starts, dtype=float)
    ms = len(starts)
    n_walk = cfg.n_paths * ms
    walk0 = np.repeat(starts, cfg.n_paths, axis=0)
    offs = env.lattice_stencil(lattice.dx, 0.5, d)
    n_off = len(offs)
    ks = len(cfg.horizons)
    z = np.empty((n_replicas, ks, ms))
    wraps = 0
    sqrt_dt = math.sqrt(dt)
    half_box = lattice.box / 2.0
    n_side = lattice.n_side
    for lo in range(0, n_replicas, rep_chunk):
        hi = min(lo + rep_chunk, n_replicas)
        c = hi - lo
        pos = np.broadcast_to(walk0, (c, n_walk, d)).copy()
        expo = np.zeros((c, n_walk))
        gens = [np.random.Generator(np.random.Philox(
            key=int(substream(cfg.seed, _R_WALK, rep)))) for rep in range(lo, hi)]
        env_seeds = [int(substream(cfg.seed, 0x55, rep)) for rep in range(lo, hi)]
        h_ptr = 0
        dsq = np.empty((c, n_walk, n_off))
        flat = np.empty((c, n_walk, n_off), dtype=np.int64)
        tmp = np.empty((c, n_walk, n_off))
        for k in range(n_steps):
            # mollified field at current positions, slab k, shared within replica
            frac = (pos + half_box) / lattice.dx - 0.5
            base = np.floor(frac + 0.5).astype(np.int64)
            dsq.fill(0.0)
            flat.fill(0)
            for a in range(d):
                np.subtract(frac[:, :, a, None], (base[:, :, a, None] + offs[None, None, :, a]),
                            out=tmp)
                dsq += tmp * tmp
                np.add(flat * n_side, np.mod(base[:, :, a, None] + offs[None, None, :, a],
                                             n_side), out=flat)
            dsq *= lattice.dx * lattice.dx
            wphi = mollifier(np.sqrt(dsq)) * lattice.dx ** d
            keys = np.array([env._slab_key(s, k) for s in env_seeds],
                            dtype=np.uint64)[:, None, None]
            xi = lattice.cell_sigma * env.counter_gauss(keys, flat.astype(np.uint64))
            conv = np.einsum("cwo,cwo->cw", wphi, xi)
            vlat = np.einsum("cwo,cwo->cw", wphi, wphi) / lattice.dx ** d
            expo += cfg.beta * conv * dt - 0.5 * cfg.beta**2 * vlat * dt
            # walker move after the field read (Ito evaluation at the left point)
            for ci, gen in enumerate(gens):
                pos[ci] += gen.standard_normal((n_walk, d)) * sqrt_dt
            while h_ptr < ks and steps_per_h[h_ptr] == k + 1:
                zc = np.exp(expo).reshape(c, ms, cfg.n_paths).mean(axis=2)
                z[lo:hi, h_ptr, :] = zc
                h_ptr += 1
        wraps += int(np.sum(np.abs(pos - walk0[None]) > half_box))
    frac_wrap = wraps / (n_replicas * n_walk * d)
    if frac_wrap > wrap_threshold:
        raise RuntimeError(f"box-wrap fraction {frac_wrap:.2e} above threshold; "
                           "enlarge the box")
    return PolymerSample(horizons=np.array(cfg.horizons), starts=starts,
                         z=z, log_z=np.log(z), backend="field",
                         diagnostics={"wrap_fraction": frac_wrap})


# ---------------------------------------------------------------------------
# bracket estimators
# ---------------------------------------------------------------------------

def _pair_v_matrix(posn: np.ndarray, kernel: CovarianceKernel) -> np.ndarray:
    g = posn @ posn.T
    sq = np.einsum("ii->i", g).copy()
    dsq = sq[:, None] + sq[None, :] - 2.0 * g
    np.maximum(dsq, 0.0, out=dsq)
    return kernel.table.eval_masked(dsq)


def _bracket_stats(u: np.ndarray, pv: np.ndarray, beta: float, v0: float):
    """(bracket, zsq) U-statistics over i != j pairs from weights and pair kernel."""
    n = len(u)
    s1 = float(u.sum())
    s2 = float((u * u).sum())
    upu = float(u @ (pv @ u)) - v0 * s2
    denom = n * (n - 1)
    return beta**2 * upu / denom, (s1 * s1 - s2) / denom


@dataclass(eq=False)
class BracketResult:
    horizons: np.ndarray
    c0: float
    bracket: np.ndarray       # (R, K) estimates of d<Z>/dt
    zsq: np.ndarray           # (R, K) U-statistic for Z_T^2
    z: np.ndarray             # (R, K) plain mean-one estimator
    residual: np.ndarray      # (R, K) T^{d/2} bracket - c0 zsq
    residual_sq: np.ndarray   # (R, K) unbiased split-half product for E[resid^2]


def run_bracket(kernel: CovarianceKernel, cfg: PolymerConfig, n_replicas: int,
                c0: float, rep_offset: int = 0) -> BracketResult:
    """Criterion runs for the bracket decay: one start, all horizons coupled."""
    _check_admissible(cfg.beta, kernel)
    if cfg.n_paths < 64:
        raise ValueError("bracket runs need at least 64 paths")
    d = cfg.dim
    ks = len(cfg.horizons)
    shape = (n_replicas, ks)
    out_b = np.empty(shape)
    out_z2 = np.empty(shape)
    out_z = np.empty(shape)
    out_r = np.empty(shape)
    out_r2 = np.empty(shape)
    nh = cfg.n_paths // 2
    for rr in range(n_replicas):
        rep = rr + rep_offset
        res = _replica_grams(kernel, cfg, rep)
        gen = np.random.Generator(np.random.Philox(
            key=int(substream(cfg.seed, _R_DRAW, rep))))
        g_cum = np.zeros(res.n)
        var_cum = np.zeros(res.n)
        bi = 0
        for kk, t in enumerate(cfg.horizons):
            while bi < len(res.blocks) and res.blocks[bi].t_hi <= t + 1e-12:
                blk = res.blocks[bi]
                g_cum += draw_increment(blk, cfg.beta, cfg.coupling, gen)
                var_cum += cfg.beta**2 * blk.diag(cfg.coupling)
                bi += 1
            u = np.exp(g_cum - 0.5 * var_cum)
            pv = _pair_v_matrix(res.snapshots[t], kernel)
            br, z2 = _bracket_stats(u, pv, cfg.beta, kernel.v0)
            scale = t ** (d / 2.0)
            out_b[rr, kk] = br
            out_z2[rr, kk] = z2
            out_z[rr, kk] = u.mean()
            out_r[rr, kk] = scale * br - c0 * z2
            bra, z2a = _bracket_stats(u[:nh], pv[:nh, :nh], cfg.beta, kernel.v0)
            brb, z2b = _bracket_stats(u[nh:], pv[nh:, nh:], cfg.beta, kernel.v0)
            out_r2[rr, kk] = (scale * bra - c0 * z2a) * (scale * brb - c0 * z2b)
    return BracketResult(horizons=np.array(cfg.horizons), c0=c0, bracket=out_b,
                         zsq=out_z2, z=out_z, residual=out_r, residual_sq=out_r2)


def bracket_derivative(kernel: CovarianceKernel, cfg: PolymerConfig, t: float,
                       x, y, n_replicas: int, rep_offset: int = 0) -> np.ndarray:
    """Per-replica estimates of the bracket derivative between starts x and y.

    Pairs run over i in paths(x), j in paths(y), i != j; when x == y this is
    the one-start U-statistic.
    """
    _check_admissible(cfg.beta, kernel)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    same = np.allclose(x, y)
    # canonical order makes the estimator literally symmetric under x <-> y
    if not same and tuple(y) < tuple(x):
        x, y = y, x
    starts = (tuple(x),) if same else (tuple(x), tuple(y))
    cfgx = replace(cfg, starts=starts, horizons=(float(t),))
    out = np.empty(n_replicas)
    for rep in range(n_replicas):
        res = _replica_grams(kernel, cfgx, rep + rep_offset)
        gen = np.random.Generator(np.random.Philox(
            key=int(substream(cfg.seed, _R_DRAW, rep + rep_offset))))
        g_cum = np.zeros(res.n)
        var_cum = np.zeros(res.n)
        for blk in res.blocks:
            g_cum += draw_increment(blk, cfg.beta, cfg.coupling, gen)
            var_cum += cfg.beta**2 * blk.diag(cfg.coupling)
        u = np.exp(g_cum - 0.5 * var_cum)
        pv = _pair_v_matrix(res.snapshots[float(t)], kernel)
        if same:
            br, _ = _bracket_stats(u, pv, cfg.beta, kernel.v0)
        else:
            sl_x, sl_y = res.group_slices
            ux, uy = u[sl_x], u[sl_y]
            cross = float(ux @ (pv[sl_x, sl_y] @ uy))
            br = cfg.beta**2 * cross / (len(ux) * len(uy))
        out[rep] = br
    return out


# ---------------------------------------------------------------------------
# fluctuation statistics (windowed observation points, one coupled noise)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FluctuationPoint:
    """Observation point (t, x) in macroscopic units: horizon tT, start x sqrt(T)."""
    t: float
    x: np.ndarray


@dataclass(eq=False)
class FluctuationResult:
    points: tuple
    base_scale: float          # T
    obs_time: float            # t_base T (common window end)
    sim_end: float
    scale_pow: float           # T^{(d-2)/2} applied to brackets
    qf: np.ndarray             # (R, P, P) signal bracket quadratic forms
    noise_diag: np.ndarray     # (R, P) linearized estimator-noise variances
    samples: np.ndarray        # (R, P) drawn fluctuation statistics
    sample_noise: np.ndarray   # (R, P) noise variance per sample (= noise_diag)
    qf_partial: dict           # future anchor -> (R, P, P) brackets up to that time
    ess: np.ndarray            # (R, P)
    tail_completed: bool
    cond_samples: np.ndarray | None = None   # (R, M, P) extra conditional draws


def _qf_matrix(blk: BlockMatrix, w_cols: np.ndarray, group_of: np.ndarray,
               n_groups: int) -> np.ndarray:
    """W^T O_off W for the stacked per-point weight columns."""
    if blk.dense is not None:
        return w_cols.T @ (blk.dense @ w_cols)
    i, j, v = blk.coo
    if len(i) == 0:
        return np.zeros((n_groups, n_groups))
    gi = group_of[i]
    gj = group_of[j]
    out = np.zeros((n_groups, n_groups))
    wi = w_cols[i, gi]
    wj = w_cols[j, gj]
    np.add.at(out, (gi, gj), v * wi * wj)
    np.add.at(out, (gj, gi), v * wi * wj)
    return out


def fluctuation_run(kernel: CovarianceKernel, beta: float, base_scale: float,
                    points, n_per_point: int, seed: int, n_replicas: int,
                    sim_extent: float = 15.0, future_anchors=(2.0, 4.0),
                    coupling: str = "reduced", tail: bool = True,
                    dt0: float = 1.0 / 64, grade: float = 64.0,
                    dt_cap: float = 0.25, rep_offset: int = 0,
                    n_condition_draws: int = 0) -> FluctuationResult:
    """Joint fluctuation statistics at observation points under one environment.

    For each point (t, x): paths are born at (t_base - t) T at x sqrt(T); all
    windows end at the common observation time t_base T, then continue to
    t_base T + sim_extent T and (optionally) an analytic infinite tail.  The
    per-replica outputs are the drawn statistics
    X = T^{(d-2)/4} (log Z[A, infinity-proxy] - log Z[A, obs]), the bracket
    quadratic forms that estimate Cov(X_p, X_q) without estimator noise, and
    per-point noise variances (linearized model; n_condition_draws extra
    draws per replica sample the exact conditional law for model-free noise
    measurement without perturbing the primary stream).
    """
    _check_admissible(beta, kernel)
    d = kernel.dim
    pts = tuple(FluctuationPoint(t=float(t), x=np.asarray(x, dtype=float))
                for t, x in points)
    t_base = max(p.t for p in pts)
    obs = t_base * base_scale
    sim_end = obs + sim_extent * base_scale
    births = [(t_base - p.t) * base_scale for p in pts]
    order = np.argsort(births, kind="stable")
    pts = tuple(pts[i] for i in order)
    births = [births[i] for i in order]
    groups = [PathGroup(start=p.x * math.sqrt(base_scale), n=n_per_point,
                        birth=b, label=str(i))
              for i, (p, b) in enumerate(zip(pts, births))]
    anchors = sorted(set([obs, sim_end] + [obs + (a - 1.0) * base_scale
                                           for a in future_anchors]))
    npt = len(pts)
    n = npt * n_per_point
    scale_pow = base_scale ** ((d - 2) / 2.0)
    scale_half = base_scale ** ((d - 2) / 4.0)
    qf = np.zeros((n_replicas, npt, npt))
    qf_partial = {a: np.zeros((n_replicas, npt, npt)) for a in anchors if a > obs}
    noise = np.zeros((n_replicas, npt))
    samples = np.zeros((n_replicas, npt))
    cond = (np.zeros((n_replicas, n_condition_draws, npt))
            if n_condition_draws else None)
    ess = np.zeros((n_replicas, npt))
    group_of = np.repeat(np.arange(npt), n_per_point)
    qtab = green_overlap(kernel) if tail else None

    for rr in range(n_replicas):
        rep = rr + rep_offset
        eng_seed = int(substream(seed, _R_ENGINE, rep))
        res = run_pair_engine(kernel, groups, anchors, eng_seed,
                              dt0=dt0, grade=grade, dt_cap=dt_cap)
        gen = np.random.Generator(np.random.Philox(
            key=int(substream(seed, _R_DRAW, rep))))
        # weights over each point's observation window
        g_cum, var_cum = _weights_along(res, beta, coupling, gen, obs)
        w_cols = np.zeros((n, npt))
        u_raw = np.exp(g_cum - 0.5 * var_cum)
        for p, sl in enumerate(res.group_slices):
            u = u_raw[sl] / u_raw[sl].sum()
            w_cols[sl, p] = u
            ess[rr, p] = 1.0 / float((u**2).sum())
        # future blocks: brackets, noise, and one drawn continuation
        future = [b for b in res.blocks if b.t_lo >= obs - 1e-12]
        if tail:
            future = future + [tail_block(res.snapshots[sim_end], qtab, sim_end)]
        s_cum = np.zeros(n)
        dvar_cum = np.zeros(n)
        for blk in future:
            m = _qf_matrix(blk, w_cols, group_of, npt)
            qf[rr] += beta**2 * scale_pow * m
            for a, store in qf_partial.items():
                if blk.t_hi <= a + 1e-12:
                    store[rr] += beta**2 * scale_pow * m
            s_cum += draw_increment(blk, beta, coupling, gen)
            dvar_cum += beta**2 * blk.diag(coupling)
        growth = np.exp(s_cum - 0.5 * dvar_cum)
        for p, sl in enumerate(res.group_slices):
            noise[rr, p] = scale_pow * float(
                (w_cols[sl, p]**2 * np.expm1(dvar_cum[sl])).sum())
            # log of the ratio of identically-summed weights: exactly zero
            # when the increments vanish (beta = 0)
            samples[rr, p] = scale_half * (
                math.log(float(u_raw[sl] @ growth[sl]))
                - math.log(float(u_raw[sl].sum())))
        for mdx in range(n_condition_draws):
            s2 = np.zeros(n)
            for blk in future:
                s2 += draw_increment(blk, beta, coupling, gen)
            growth2 = np.exp(s2 - 0.5 * dvar_cum)
            for p, sl in enumerate(res.group_slices):
                cond[rr, mdx, p] = scale_half * (
                    math.log(float(u_raw[sl] @ growth2[sl]))
                    - math.log(float(u_raw[sl].sum())))
    return FluctuationResult(points=pts, base_scale=base_scale, obs_time=obs,
                             sim_end=sim_end, scale_pow=scale_pow, qf=qf,
                             noise_diag=noise, samples=samples,
                             sample_noise=noise, qf_partial=qf_partial,
                             ess=ess, tail_completed=tail, cond_samples=cond)


@dataclass(eq=False)
class GProcessResult:
    taus: np.ndarray
    trajectories: np.ndarray   # (R, n_taus) of the rescaled ratio martingale
    bracket_qf: np.ndarray     # (R, n_taus) bracket estimates at each tau
    noise_diag: np.ndarray     # (R, n_taus)
    g_targets: np.ndarray


def g_process(kernel: CovarianceKernel, beta: float, base_t: float, taus,
              n_paths: int, seed: int, n_replicas: int, c0: float,
              coupling: str = "reduced", dt0: float = 1.0 / 64,
              grade: float = 64.0, dt_cap: float = 0.25,
              rep_offset: int = 0) -> GProcessResult:
    """Rescaled ratio martingale on [1, tau_max] plus its bracket estimates.

    Targets g(tau) = (2/(d-2)) c0 (1 - tau^{-(d-2)/2}).
    """
    _check_admissible(beta, kernel)
    taus = np.asarray(sorted(float(t) for t in taus))
    if taus[0] != 1.0:
        raise ValueError("tau grid must start at 1")
    d = kernel.dim
    anchors = [base_t * t for t in taus]
    group = PathGroup(start=np.zeros(d), n=n_paths)
    scale_pow = base_t ** ((d - 2) / 2.0)
    scale_half = base_t ** ((d - 2) / 4.0)
    ntau = len(taus)
    traj = np.zeros((n_replicas, ntau))
    br = np.zeros((n_replicas, ntau))
    nz = np.zeros((n_replicas, ntau))
    for rr in range(n_replicas):
        rep = rr + rep_offset
        res = run_pair_engine(kernel, [group], anchors,
                              int(substream(seed, _R_ENGINE, rep)),
                              dt0=dt0, grade=grade, dt_cap=dt_cap)
        gen = np.random.Generator(np.random.Philox(
            key=int(substream(seed, _R_DRAW, rep))))
        g_cum, var_cum = _weights_along(res, beta, coupling, gen, base_t)
        u = np.exp(g_cum - 0.5 * var_cum)
        u_sum = u.sum()
        w = u / u_sum
        w_cols = w[:, None]
        group_of = np.zeros(res.n, dtype=np.int64)
        s_cum = np.zeros(res.n)
        dvar = np.zeros(res.n)
        qf_acc = 0.0
        ti = 1
        for blk in res.blocks:
            if blk.t_lo < base_t - 1e-12:
                continue
            qf_acc += beta**2 * scale_pow * float(
                _qf_matrix(blk, w_cols, group_of, 1)[0, 0])
            s_cum += draw_increment(blk, beta, coupling, gen)
            dvar += beta**2 * blk.diag(coupling)
            if ti < ntau and abs(blk.t_hi - anchors[ti]) < 1e-9:
                ratio = float(u @ np.exp(s_cum - 0.5 * dvar)) / u_sum
                traj[rr, ti] = scale_half * (ratio - 1.0)
                br[rr, ti] = qf_acc
                nz[rr, ti] = scale_pow * float((w**2 * np.expm1(dvar)).sum())
                ti += 1
    g_t = 2.0 / (d - 2) * c0 * (1.0 - taus ** (-(d - 2) / 2.0))
    return GProcessResult(taus=taus, trajectories=traj, bracket_qf=br,
                          noise_diag=nz, g_targets=g_t)


def averaged_fluctuation(kernel: CovarianceKernel, beta: float, base_scale: float,
                         t: float, grid_points: np.ndarray, phi_values: np.ndarray,
                         cell_volume: float, n_per_point: int, seed: int,
                         n_replicas: int, **kw):
    """Test-function average of the fluctuation field over a start grid.

    Returns (scalar samples, variance estimate per replica from the bracket
    quadratic form, noise variance per replica, FluctuationResult).
    The statistic is sum_g phi(x_g) X(t, x_g) cell_volume, a plain quadrature
    of the pointwise statistics, so its bracket is c^T (qf + diag noise) c.
    """
    phi_values = np.asarray(phi_values, dtype=float)
    keep = phi_values != 0.0
    if not np.any(keep):
        raise ValueError("test function vanishes on the whole grid")
    grid_points = np.asarray(grid_points, dtype=float)[keep]
    coeffs = phi_values[keep] * cell_volume
    pts = [(t, x) for x in grid_points]
    res = fluctuation_run(kernel, beta, base_scale, pts, n_per_point, seed,
                          n_replicas, **kw)
    samples = res.samples @ coeffs
    var_qf = np.einsum("p,rpq,q->r", coeffs, res.qf, coeffs)
    noise = (res.noise_diag * coeffs**2).sum(axis=1)
    return samples, var_qf, noise, res
