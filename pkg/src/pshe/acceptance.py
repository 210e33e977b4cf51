"""The acceptance suite: one function per criterion, each returning TestReports.

Budgets come from a SuiteScale preset; every tolerance is either exact, a
stated absolute target, or expressed in standard errors computed from the
data, so the verdicts stay calibrated when the budget changes.  The "desk"
preset matches a multi-core workstation; "ci" fits a single modest core;
"quick" is a smoke run of the machinery (exact checks only at full strength).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from . import limits, statlab
from .constants import ConstantsTable, build_constants_table
from .environment import LatticeSpec
from .kernels import (CovarianceKernel, Mollifier, autocorrelate,
                      heat_kernel_time_integral, make_mollifier)
from .paths import graded_time_grid, is_admissible, overlap_functional_mc
from .polymer import (PolymerConfig, averaged_fluctuation, fluctuation_run,
                      g_process, run_bracket, sample_polymer_field,
                      sample_polymer_gram)
from .statlab import (TestReport, interval_contains, ks_two_sample,
                      ks_uniform, loglog_slope, mean_ci, trend_to_zero,
                      variance_ci)

__all__ = ["SuiteScale", "SCALES", "run_suite", "CRITERIA", "suite_constants"]

D = 3
BETA = 0.2


@dataclass(frozen=True)
class SuiteScale:
    name: str
    # criterion 2
    meanone_gram_paths: int = 256
    meanone_gram_reps: int = 256
    meanone_field_paths: int = 128
    meanone_field_reps: int = 160
    # criterion 3
    ks_paths: int = 32
    ks_reps: int = 2000
    ks_dt: float = 2.5e-3
    # criterion 4
    const_node_samples: int = 8192
    const_c1_samples: int = 65536
    const_c2_samples: int = 4_000_000
    # criterion 5
    bracket_paths: int = 512
    bracket_reps: int = 224
    # criterion 6
    gproc_paths: int = 1024
    gproc_reps: int = 224
    # criteria 7 + 8
    fluct_paths_per_point: int = 341
    fluct_reps: int = 224
    fluct_sim_extent: float = 15.0
    # criterion 9
    decay_pairs: int = 49152
    # criterion 10
    avg_paths_per_site: int = 8
    avg_reps: int = 192
    base_t: float = 8.0
    horizons: tuple = (2.0, 4.0, 8.0, 16.0)


SCALES = {
    "quick": SuiteScale(
        name="quick", meanone_gram_paths=64, meanone_gram_reps=48,
        meanone_field_paths=32, meanone_field_reps=24, ks_paths=16,
        ks_reps=200, ks_dt=5e-3, const_node_samples=1024,
        const_c1_samples=8192, const_c2_samples=200_000, bracket_paths=128,
        bracket_reps=32, gproc_paths=128, gproc_reps=32,
        fluct_paths_per_point=96, fluct_reps=32, fluct_sim_extent=7.0,
        decay_pairs=8192, avg_paths_per_site=4, avg_reps=32, base_t=4.0),
    "ci": SuiteScale(name="ci"),
    "desk": SuiteScale(
        name="desk", meanone_gram_reps=500, meanone_field_reps=300,
        ks_reps=2000, const_node_samples=16384, const_c1_samples=131072,
        bracket_paths=1024, bracket_reps=400, gproc_paths=2048,
        gproc_reps=400, fluct_paths_per_point=682, fluct_reps=500,
        decay_pairs=131072, avg_paths_per_site=16, avg_reps=400),
}


def _kernel() -> tuple[Mollifier, CovarianceKernel]:
    m = make_mollifier(D)
    return m, autocorrelate(m)


def suite_constants(scale: SuiteScale, seed: int) -> ConstantsTable:
    _, V = _kernel()
    return build_constants_table(BETA, V, seed=seed,
                                 n_per_node=scale.const_node_samples,
                                 n_c1=scale.const_c1_samples,
                                 n_c2=scale.const_c2_samples)


# --------------------------------------------------------------------------
# criteria
# --------------------------------------------------------------------------

def criterion_1_degeneracy(scale: SuiteScale, seed: int) -> list[TestReport]:
    """beta = 0: Z == 1, free energy == 0, fluctuation samples == 0, exactly."""
    m, V = _kernel()
    cfg = PolymerConfig(dim=D, beta=0.0, n_paths=32, horizons=(1.0, 2.0), seed=seed)
    sg = sample_polymer_gram(V, cfg, 6)
    lat = LatticeSpec(dim=D, dx=0.25, box=11.5, dt=1 / 64, horizon=2.0)
    sf = sample_polymer_field(m, V, cfg, lat, 3)
    fl = fluctuation_run(V, 0.0, 2.0, [(1.0, np.zeros(D))], 48, seed, 4,
                         sim_extent=3.0)
    dev = max(float(np.abs(sg.z - 1.0).max()), float(np.abs(sf.z - 1.0).max()),
              float(np.abs(sg.log_z).max()), float(np.abs(fl.samples).max()),
              float(np.abs(fl.qf).max()))
    return [TestReport(name="1_degeneracy_beta0", statistic=dev, critical=0.0,
                       passed=dev == 0.0, n=sg.z.size + sf.z.size,
                       details={"backends": ["gram", "field"]})]


def criterion_2_mean_one(scale: SuiteScale, seed: int) -> list[TestReport]:
    """Replica mean of Z equals 1 within 5 SE for every horizon, both backends."""
    m, V = _kernel()
    reports = []
    cfg = PolymerConfig(dim=D, beta=BETA, n_paths=scale.meanone_gram_paths,
                        horizons=scale.horizons, seed=seed)
    sg = sample_polymer_gram(V, cfg, scale.meanone_gram_reps)
    t_max = scale.horizons[-1]
    lat = LatticeSpec(dim=D, dx=0.25, box=8.0 * math.sqrt(t_max), dt=1 / 64,
                      horizon=t_max)
    cff = PolymerConfig(dim=D, beta=BETA, n_paths=scale.meanone_field_paths,
                        horizons=scale.horizons, seed=seed + 1)
    sf = sample_polymer_field(m, V, cff, lat, scale.meanone_field_reps)
    for smp in (sg, sf):
        for kk, t in enumerate(smp.horizons):
            zt = smp.z[:, kk, 0]
            mu, se, _ = mean_ci(zt)
            zstat = abs(mu - 1.0) / se if se > 0 else 0.0
            reports.append(TestReport(
                name=f"2_mean_one_{smp.backend}_T{t:g}", statistic=zstat,
                critical=5.0, passed=zstat <= 5.0, n=len(zt),
                details={"mean": mu, "se": se}))
    return reports


def criterion_3_backend_equiv(scale: SuiteScale, seed: int) -> list[TestReport]:
    """Two-sample KS between gram and field log Z at T = 1 below the 1% critical value."""
    m, V = _kernel()
    cfg = PolymerConfig(dim=D, beta=BETA, n_paths=scale.ks_paths,
                        horizons=(1.0,), seed=seed, dt0=scale.ks_dt, grade=0.0)
    sg = sample_polymer_gram(V, cfg, scale.ks_reps)
    lat = LatticeSpec(dim=D, dx=0.125, box=8.0, dt=scale.ks_dt, horizon=1.0)
    cff = replace(cfg, seed=seed + 1)
    sf = sample_polymer_field(m, V, cff, lat, scale.ks_reps, rep_chunk=200)
    rep = ks_two_sample(sg.log_z[:, 0, 0], sf.log_z[:, 0, 0],
                        name="3_backend_equivalence_ks")
    rep.details.update(gram_mean=float(sg.log_z.mean()),
                       field_mean=float(sf.log_z.mean()),
                       gram_sd=float(sg.log_z.std()),
                       field_sd=float(sf.log_z.std()))
    return [rep]


def criterion_4_constants(scale: SuiteScale, seed: int,
                          table: ConstantsTable) -> list[TestReport]:
    """Two-route agreement of the bracket constant plus endpoint-moment values."""
    reports = []
    diff = abs(table.c0_a - table.c0_b)
    comb = 2.0 * math.hypot(table.c0_a_se, table.c0_b_se)
    reports.append(TestReport(
        name="4_c0_two_forms", statistic=diff, critical=comb,
        passed=diff <= comb, n=table.n_per_node,
        details={"c0_a": table.c0_a, "c0_b": table.c0_b}))
    exact = table.gamma_sq == table.beta**2 * table.gbar_sq
    reports.append(TestReport(
        name="4_gamma_vs_gbar_exact", statistic=0.0 if exact else 1.0,
        critical=0.0, passed=exact, n=1,
        details={"gamma_sq": table.gamma_sq, "gbar_sq": table.gbar_sq}))
    from .constants import c2
    for dim, target in ((3, 2.0 / math.sqrt(math.pi)), (4, 1.0)):
        cf, mc, se = c2(dim, scale.const_c2_samples, seed + dim)
        z = abs(mc - target) / se if se > 0 else 0.0
        reports.append(TestReport(
            name=f"4_c2_d{dim}", statistic=z, critical=3.0, passed=z <= 3.0,
            n=scale.const_c2_samples,
            details={"closed_form": cf, "mc": mc, "se": se, "target": target}))
    return reports


def criterion_5_bracket_decay(scale: SuiteScale, seed: int,
                              table: ConstantsTable) -> list[TestReport]:
    """Rescaled bracket derivative minus c0 Z^2: decay in mean and mean square."""
    _, V = _kernel()
    cfg = PolymerConfig(dim=D, beta=BETA, n_paths=scale.bracket_paths,
                        horizons=scale.horizons, seed=seed, coupling="full")
    br = run_bracket(V, cfg, scale.bracket_reps, c0=table.c0_a)
    n = scale.bracket_reps
    means = br.residual.mean(axis=0)
    ses = br.residual.std(axis=0, ddof=1) / math.sqrt(n)
    r1 = trend_to_zero(means, ses, name="5_bracket_mean_trend")
    sq_means = br.residual_sq.mean(axis=0)
    sq_ses = br.residual_sq.std(axis=0, ddof=1) / math.sqrt(n)
    r2 = trend_to_zero(sq_means, sq_ses, name="5_bracket_meansq_trend")
    for r in (r1, r2):
        r.details["horizons"] = list(map(float, br.horizons))
        r.details["c0"] = table.c0_a
    r1.details["z_means"] = list(map(float, br.z.mean(axis=0)))
    return [r1, r2]


def criterion_6_bracket_limit(scale: SuiteScale, seed: int,
                              table: ConstantsTable) -> list[TestReport]:
    """Variance of the ratio martingale versus g(tau) within 15% at tau = 2, 4."""
    _, V = _kernel()
    gp = g_process(V, BETA, scale.base_t, (1.0, 2.0, 4.0), scale.gproc_paths,
                   seed, scale.gproc_reps, c0=table.c0_a, coupling="reduced")
    reports = []
    for ti, tau in enumerate(gp.taus):
        if tau == 1.0:
            continue
        target = table.g_limit(tau)
        est = float(gp.bracket_qf[:, ti].mean())
        se = float(gp.bracket_qf[:, ti].std(ddof=1) / math.sqrt(gp.bracket_qf.shape[0]))
        rel = abs(est - target) / target
        raw_var = float(gp.trajectories[:, ti].var(ddof=1))
        noise = float(gp.noise_diag[:, ti].mean())
        reports.append(TestReport(
            name=f"6_bracket_limit_tau{tau:g}", statistic=rel, critical=0.15,
            passed=rel <= 0.15, n=gp.bracket_qf.shape[0],
            details={"tau": float(tau), "bracket_estimate": est, "se": se,
                     "g_target": target, "raw_trajectory_var": raw_var,
                     "estimator_noise_var": noise}))
    return reports


def _fluct_points():
    return [(1.0, np.zeros(D)), (1.0, np.array([1.0, 0.0, 0.0])),
            (2.0, np.zeros(D))]


def run_fluctuation_suite(scale: SuiteScale, seed: int):
    _, V = _kernel()
    return fluctuation_run(
        V, BETA, scale.base_t, _fluct_points(), scale.fluct_paths_per_point,
        seed, scale.fluct_reps, sim_extent=scale.fluct_sim_extent,
        future_anchors=(2.0, 4.0), coupling="reduced", tail=True,
        n_condition_draws=8)


def empirical_noise_var(samples_cond: np.ndarray, qf_mean: float) -> tuple[float, float]:
    """Model-free estimator-noise variance from conditional re-draws.

    mean over replicas of Var(X | paths, weights) minus the bracket estimate
    of the signal part; the second return value is the standard error of the
    conditional-variance mean.
    """
    v_cond = samples_cond.var(axis=1, ddof=1)
    se = float(v_cond.std(ddof=1) / math.sqrt(len(v_cond)))
    return float(v_cond.mean() - qf_mean), se


def criterion_7_pointwise_clt(scale: SuiteScale, seed: int,
                              table: ConstantsTable, fl=None) -> list[TestReport]:
    """KS of the rescaled free-energy differences against their Gaussian limit,
    and a variance interval containing the limit variance.

    The drawn statistics carry exactly known per-replica estimator noise; the
    KS runs on the probability transform against N(0, target + noise_r) and
    the variance interval is shifted by the mean noise before comparison.
    """
    if fl is None:
        fl = run_fluctuation_suite(scale, seed)
    p_idx = next(i for i, p in enumerate(fl.points)
                 if p.t == 1.0 and not p.x.any())
    xs = fl.samples[:, p_idx]
    nz = fl.noise_diag[:, p_idx]
    target = table.pointwise_clt_variance(t=1.0)
    pit = norm.cdf(xs / np.sqrt(target + nz))
    r_ks = ks_uniform(pit, name="7_pointwise_clt_ks")
    r_ks.details.update(target_var=target, mean_noise_var=float(nz.mean()),
                        samples=[float(v) for v in xs],
                        noise_vars=[float(v) for v in nz],
                        note="PIT against N(0, target + exact per-replica "
                             "estimator noise)")
    v, ci = variance_ci(xs, seed=seed)
    qf_mean = float(fl.qf[:, p_idx, p_idx].mean())
    noise_emp, noise_se = empirical_noise_var(fl.cond_samples[:, :, p_idx], qf_mean)
    shifted = (ci[0] - noise_emp, ci[1] - noise_emp)
    ok = interval_contains(shifted, target)
    r_var = TestReport(
        name="7_pointwise_clt_variance", statistic=v - noise_emp,
        critical=target, passed=ok, n=len(xs),
        details={"raw_variance": v, "ci_raw": list(ci),
                 "noise_subtracted_ci": list(shifted), "target": target,
                 "noise_empirical": noise_emp, "noise_empirical_se": noise_se,
                 "noise_linearized": float(nz.mean()),
                 "bracket_estimate": qf_mean})
    return [r_ks, r_var]


def criterion_8_space_time_cov(scale: SuiteScale, seed: int,
                               table: ConstantsTable, fl=None) -> list[TestReport]:
    """Empirical covariance of the fluctuation samples versus the limit quadrature.

    The gate is the sample covariance at its own standard error (per-path
    estimator noise is independent across point groups, so it cancels in the
    off-diagonal covariances).  The conditional bracket estimate (far more
    precise, but exposing the percent-level finite-horizon bias) is reported
    alongside for diagnostics and figures.
    """
    if fl is None:
        fl = run_fluctuation_suite(scale, seed)
    reports = []
    n = fl.qf.shape[0]
    point_vars = []
    for i, p in enumerate(fl.points):
        est = float(fl.qf[:, i, i].mean())
        tgt = table.pointwise_clt_variance(t=p.t)
        point_vars.append({"t": p.t, "x_abs": float(np.linalg.norm(p.x)),
                           "variance": est, "target": tgt})
    for i in range(len(fl.points)):
        for j in range(i + 1, len(fl.points)):
            pi, pj = fl.points[i], fl.points[j]
            target = limits.cov_H(D, (pi.t, pi.x), (pj.t, pj.x), table.gamma_sq)
            a = fl.samples[:, i]
            b = fl.samples[:, j]
            cross = float(np.cov(a, b, ddof=1)[0, 1])
            se = math.sqrt((a.var(ddof=1) * b.var(ddof=1) + cross**2) / (n - 1))
            bracket = float(fl.qf[:, i, j].mean())
            bracket_se = float(fl.qf[:, i, j].std(ddof=1) / math.sqrt(n))
            z = abs(cross - target) / se if se > 0 else math.inf
            reports.append(TestReport(
                name=f"8_cov_({pi.t:g},{np.linalg.norm(pi.x):g})x({pj.t:g},{np.linalg.norm(pj.x):g})",
                statistic=z, critical=3.0, passed=z <= 3.0, n=n,
                details={"sample_cov": cross, "se": se, "target": target,
                         "bracket_cov": bracket, "bracket_se": bracket_se,
                         "bracket_rel_dev": (bracket - target) / target}))
    reports[0].details["point_variances"] = point_vars
    return reports


def criterion_9_decorrelation(scale: SuiteScale, seed: int,
                              table: ConstantsTable) -> list[TestReport]:
    """Log-log slope of the infinite-horizon covariance over separations 2..8.

    Cov(Z_inf(0), Z_inf(x)) = E[exp(beta^2 total pair overlap)] - 1 by the
    two-path representation; tail-completed truncation at s_max = 64.
    """
    _, V = _kernel()
    seps = np.array([2.0, 3.0, 4.0, 6.0, 8.0])
    starts = np.zeros((len(seps), D))
    starts[:, 0] = seps
    mean, se, mean_h, _ = overlap_functional_mc(
        V, starts, BETA, 64.0, scale.decay_pairs, seed, tail=True)
    cov = mean - 1.0
    slope, ci = loglog_slope(np.column_stack([seps, cov]))
    err = abs(slope + (D - 2))
    rep = TestReport(name="9_decorrelation_slope", statistic=err, critical=0.15,
                     passed=err <= 0.15, n=scale.decay_pairs * len(seps),
                     details={"slope": slope, "slope_ci": list(ci),
                              "separations": seps.tolist(),
                              "covariances": cov.tolist(),
                              "cov_ses": se.tolist(),
                              "c1_reference": table.c1})
    return [rep]


def _averaged_grid(spacing: float = 0.25, radius: float = 1.0):
    ax = np.arange(-radius, radius + spacing / 2, spacing)
    pts = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    r2 = np.einsum("ij,ij->i", pts, pts)
    inside = r2 < radius**2
    phi = np.zeros(len(pts))
    phi[inside] = np.exp(-1.0 / (1.0 - r2[inside] / radius**2))
    keep = phi > 0
    return pts[keep], phi[keep], spacing**3


def criterion_10_averaged(scale: SuiteScale, seed: int,
                          table: ConstantsTable) -> list[TestReport]:
    """Variance of the test-function average versus the double quadrature."""
    _, V = _kernel()
    pts, phi, vol = _averaged_grid()
    t = 1.0
    samples, var_qf, noise, res = averaged_fluctuation(
        V, BETA, scale.base_t, t, pts, phi, vol, scale.avg_paths_per_site,
        seed, scale.avg_reps, sim_extent=scale.fluct_sim_extent,
        coupling="reduced", tail=True, n_condition_draws=8)
    # discrete double quadrature of the limit covariance over the same grid
    # (all births coincide, so the run preserves the grid order)
    coeffs = phi * vol
    seps = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    uniq = np.unique(np.round(seps, 9))
    cov_tab = {s: table.gamma_sq * heat_kernel_time_integral(D, float(s), 2.0 * t)
               for s in uniq}
    covm = np.vectorize(lambda s: cov_tab[round(s, 9)])(np.round(seps, 9))
    target = float(coeffs @ covm @ coeffs)
    v, ci = variance_ci(samples, seed=seed)
    qf_mean = float(var_qf.mean())
    a_cond = np.einsum("rmp,p->rm", res.cond_samples, coeffs)
    noise_emp, noise_se = empirical_noise_var(a_cond, qf_mean)
    corrected = v - noise_emp
    # the criterion tolerance: 3 SE of the (noise-corrected) variance estimate
    se_var = math.hypot(v * math.sqrt(2.0 / (len(samples) - 1)), noise_se)
    z = abs(corrected - target) / se_var
    rep = TestReport(name="10_averaged_fluctuation_variance", statistic=z,
                     critical=3.0, passed=z <= 3.0, n=len(samples),
                     details={"raw_variance": v, "corrected_variance": corrected,
                              "noise_empirical": noise_emp,
                              "noise_linearized": float(noise.mean()),
                              "target_quadrature": target,
                              "bracket_variance": qf_mean,
                              "n_sites": len(pts)})
    return [rep]


def criterion_11_stationarity(scale: SuiteScale, seed: int,
                              table: ConstantsTable) -> list[TestReport]:
    """Time-invariance of the stationary-field marginal with the matched amplitude."""
    gs = table.gamma_sq
    x0, x1 = np.zeros(D), np.array([1.0, 0.0, 0.0])
    base = limits.cov_Hst(D, (0.0, x0), (0.0, x1), gs)
    worst = 0.0
    for t in (1.0, 4.0):
        v = limits.cov_Hst(D, (t, x0), (t, x1), gs)
        worst = max(worst, abs(v - base))
    by_time = [[0.0, base]] + [[t, limits.cov_Hst(D, (t, x0), (t, x1), gs)]
                               for t in (1.0, 4.0)]
    r1 = TestReport(name="11_stationarity_identity", statistic=worst,
                    critical=1e-6, passed=worst <= 1e-6, n=2,
                    details={"amplitude": "gamma", "base_cov": base,
                             "by_time": by_time})
    # informational: the mismatched-amplitude bookkeeping gap
    mism = abs(limits.cov_H(D, (1.0, x0), (1.0, x1), gs)
               + limits.cov_Hbar(D, (1.0, x0), (1.0, x1), table.gbar_sq) - base)
    r2 = TestReport(name="11_amplitude_mismatch_diagnostic", statistic=mism,
                    critical=math.inf, passed=True, n=1,
                    details={"note": "gap when the additive amplitude is taken "
                                     "without the beta^2 factor; informational",
                             "mismatched_cov": base + mism,
                             "gbar_sq": table.gbar_sq})
    return [r1, r2]


def criterion_12_quadrature_scaling(scale: SuiteScale, seed: int) -> list[TestReport]:
    """Power-law scaling of the time-integrated heat kernel plus the prefactor ratio."""
    rs = np.array([1.0, 2.0, 4.0, 8.0])
    vals = np.array([heat_kernel_time_integral(D, float(r), quadrature=True)
                     for r in rs])
    slope, ci = loglog_slope(np.column_stack([rs, vals]))
    err = abs(slope + (D - 2))
    r1 = TestReport(name="12_heat_integral_slope", statistic=err, critical=1e-3,
                    passed=err <= 1e-3, n=len(rs),
                    details={"slope": slope, "slope_ci": list(ci)})
    ratio = limits.gff_prefactor_ratio(D)
    r2 = TestReport(name="12_gff_prefactor_ratio", statistic=ratio,
                    critical=math.inf, passed=True, n=1,
                    details={"note": "time-integral prefactor over the printed "
                                     "closed form; informational diagnostic"})
    return [r1, r2]


CRITERIA = ["degeneracy", "mean_one", "backend_equiv", "constants",
            "bracket_decay", "bracket_limit", "pointwise_clt",
            "space_time_cov", "decorrelation", "averaged", "stationarity",
            "quadrature_scaling"]


def run_suite(scale_name: str = "ci", seed: int = 20260808, only=None,
              progress=print) -> list[TestReport]:
    """Run every criterion at the given scale; one pass/fail line each."""
    scale = SCALES[scale_name]
    wanted = set(only) if only else set(CRITERIA)
    reports: list[TestReport] = []
    t00 = time.time()
    table = None
    if wanted & {"constants", "bracket_decay", "bracket_limit", "pointwise_clt",
                 "space_time_cov", "decorrelation", "averaged", "stationarity"}:
        table = suite_constants(scale, seed + 4)
    fl = None

    def _run(tag, fn, *args):
        nonlocal fl
        t0 = time.time()
        reps = fn(*args)
        for r in reps:
            status = "PASS" if r.passed else "FAIL"
            progress(f"[{status}] {r.name}: stat={r.statistic:.5g} "
                     f"crit={r.critical:.5g} n={r.n} ({time.time() - t0:.1f}s)")
        reports.extend(reps)

    if "degeneracy" in wanted:
        _run("1", criterion_1_degeneracy, scale, seed + 1)
    if "mean_one" in wanted:
        _run("2", criterion_2_mean_one, scale, seed + 2)
    if "backend_equiv" in wanted:
        _run("3", criterion_3_backend_equiv, scale, seed + 3)
    if "constants" in wanted:
        _run("4", criterion_4_constants, scale, seed + 4, table)
    if "bracket_decay" in wanted:
        _run("5", criterion_5_bracket_decay, scale, seed + 5, table)
    if "bracket_limit" in wanted:
        _run("6", criterion_6_bracket_limit, scale, seed + 6, table)
    if wanted & {"pointwise_clt", "space_time_cov"}:
        fl = run_fluctuation_suite(scale, seed + 7)
    if "pointwise_clt" in wanted:
        _run("7", criterion_7_pointwise_clt, scale, seed + 7, table, fl)
    if "space_time_cov" in wanted:
        _run("8", criterion_8_space_time_cov, scale, seed + 7, table, fl)
    if "decorrelation" in wanted:
        _run("9", criterion_9_decorrelation, scale, seed + 9, table)
    if "averaged" in wanted:
        _run("10", criterion_10_averaged, scale, seed + 10, table)
    if "stationarity" in wanted:
        _run("11", criterion_11_stationarity, scale, seed + 11, table)
    if "quadrature_scaling" in wanted:
        _run("12", criterion_12_quadrature_scaling, scale, seed + 12)
    progress(f"suite total {time.time() - t00:.0f}s; "
             f"{sum(r.passed for r in reports)}/{len(reports)} reports passed")
    return reports
