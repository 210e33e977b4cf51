import { existsSync } from "fs";
import { numericColumn, readCsv, requireColumns } from "./csv.js";
import { findVerdict, loadConstants, loadVerdicts, tryLoadVerdicts } from "./jobs.js";
import { placeholderSvg, Scene } from "./svg.js";
/** Inverse standard normal CDF (Acklam rational approximation). */
export function normInv(p) {
    if (p <= 0 || p >= 1)
        throw new Error("p outside (0,1)");
    const a = [-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2,
        1.383577518672690e2, -3.066479806614716e1, 2.506628277459239];
    const b = [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2,
        6.680131188771972e1, -1.328068155288572e1];
    const c = [-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838,
        -2.549732539343734, 4.374664141464968, 2.938163982698783];
    const d = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996,
        3.754408661907416];
    const plow = 0.02425;
    let q, r;
    if (p < plow) {
        q = Math.sqrt(-2 * Math.log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > 1 - plow) {
        q = Math.sqrt(-2 * Math.log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}
function sceneOpts(job, extra) {
    return { ...extra, width: job.width, height: job.height };
}
/** QQ plot of noise-standardized fluctuation samples against the unit normal.

 * With suite outputs present, samples are standardized by the limit variance
 * plus the exact per-replica noise and the KS verdict is quoted verbatim.
 * A bare CSV (no verdicts.json) is standardized by its own sample moments. */
export function qqFigure(job) {
    const csvPath = `${job.inputDir}/fluctuation_samples.csv`;
    if (!existsSync(csvPath))
        return placeholderSvg("no data: fluctuation_samples.csv missing");
    const table = readCsv(csvPath);
    if (table.rows.length === 0)
        return placeholderSvg("no data: empty sample file");
    requireColumns(table, ["sample"], csvPath);
    const samples = numericColumn(table, "sample");
    let std;
    let ks;
    let target = NaN;
    if (existsSync(`${job.inputDir}/verdicts.json`)) {
        const verdicts = loadVerdicts(job.inputDir);
        ks = findVerdict(verdicts, "7_pointwise_clt_ks");
    }
    if (ks) {
        requireColumns(table, ["noise_var"], csvPath);
        target = ks.details["target_var"];
        const noise = numericColumn(table, "noise_var");
        std = samples.map((s, i) => s / Math.sqrt(target + noise[i]));
    }
    else {
        const m = samples.reduce((a, b) => a + b, 0) / samples.length;
        const sd = Math.sqrt(samples.reduce((a, b) => a + (b - m) ** 2, 0) /
            (samples.length - 1));
        std = samples.map((s) => (s - m) / sd);
    }
    std.sort((x, y) => x - y);
    const n = std.length;
    const pts = std.map((v, i) => [normInv((i + 0.5) / n), v]);
    const sc = new Scene(sceneOpts(job, {
        title: "QQ: standardized fluctuation samples vs unit normal",
        xLabel: "normal quantile", yLabel: "sample quantile",
    }));
    const lo = pts[0][0], hi = pts[n - 1][0];
    sc.setExtent([lo, hi], [Math.min(lo, pts[0][1]), Math.max(hi, pts[n - 1][1])]);
    // pointwise 99% KS band around the diagonal
    const band = 1.628 / Math.sqrt(n);
    const diag = [[lo, lo], [hi, hi]];
    sc.polyline(diag, "#c33", 1.4);
    const bandPts = (sign) => Array.from({ length: 81 }, (_, k) => {
        const q = lo + ((hi - lo) * k) / 80;
        const p = Math.min(1 - 1e-9, Math.max(1e-9, cdf(q) + sign * band));
        return [q, normInv(p)];
    });
    sc.polyline(bandPts(1), "#e99", 1, "4 3");
    sc.polyline(bandPts(-1), "#e99", 1, "4 3");
    sc.scatter(pts, "#226");
    if (ks) {
        sc.note(`KS statistic ${ks.statistic.toPrecision(4)} ` +
            `(critical ${ks.critical.toPrecision(4)}, ${ks.passed ? "pass" : "fail"})`);
        sc.note(`n = ${n}, limit variance ${target.toExponential(3)}`, 1);
    }
    else {
        sc.note(`n = ${n}, standardized by sample moments`);
    }
    return sc.render();
}
function cdf(x) {
    return 0.5 * (1 + erf(x / Math.SQRT2));
}
function erf(x) {
    const t = 1 / (1 + 0.3275911 * Math.abs(x));
    const y = 1 - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t -
        0.284496736) * t + 0.254829592) * t * Math.exp(-x * x);
    return x >= 0 ? y : -y;
}
/** Fluctuation variance against observation time on log axes with the
 * Edwards-Wilkinson power-law reference from the constants JSON. */
export function varianceVsTFigure(job) {
    const verdicts = tryLoadVerdicts(job.inputDir);
    const cov = findVerdict(verdicts, "8_cov");
    const pv = cov?.details["point_variances"];
    if (!pv || pv.length === 0)
        return placeholderSvg("no data: point variances missing");
    const consts = loadConstants(job.inputDir);
    const c0 = consts["c0_a"];
    const dim = consts["dim"];
    const sc = new Scene(sceneOpts(job, {
        title: "fluctuation variance vs t (log-log)",
        xLabel: "t", yLabel: "variance", xKind: "log", yKind: "log",
    }));
    const xs = pv.map((p) => p.t);
    const ys = pv.map((p) => p.variance).concat(pv.map((p) => p.target));
    sc.setExtent(xs.concat([0.5, 4]), ys);
    const curve = Array.from({ length: 33 }, (_, k) => {
        const t = 0.5 * Math.pow(8, k / 32);
        return [t, (2 / (dim - 2)) * c0 * Math.pow(t, -(dim - 2) / 2)];
    });
    sc.polyline(curve, "#c33", 1.5);
    sc.scatter(pv.map((p) => [p.t, p.variance]), "#226", 4);
    sc.note(`reference slope -(d-2)/2 = ${(-(dim - 2) / 2).toFixed(1)}, ` +
        `amplitude 2 c0/(d-2) from constants.json`);
    return sc.render();
}
/** Covariance decay over separation with the fitted slope as the headline label.

 * Suite mode quotes the verdict's slope verbatim; a bare covariance_decay.csv
 * (columns separation, covariance) gets a local least-squares line. */
export function covarianceDecayFigure(job) {
    let seps = [];
    let covs = [];
    let slope = NaN;
    let verdictNote = "";
    if (existsSync(`${job.inputDir}/verdicts.json`)) {
        const v = findVerdict(loadVerdicts(job.inputDir), "9_decorrelation_slope");
        if (v) {
            seps = v.details["separations"];
            covs = v.details["covariances"];
            slope = v.details["slope"];
            verdictNote = v.passed ? "pass" : "fail";
        }
    }
    if (seps.length === 0) {
        const csvPath = `${job.inputDir}/covariance_decay.csv`;
        if (!existsSync(csvPath))
            return placeholderSvg("no data: decay inputs missing");
        const table = readCsv(csvPath);
        if (table.rows.length === 0)
            return placeholderSvg("no data: empty decay file");
        requireColumns(table, ["separation", "covariance"], csvPath);
        seps = numericColumn(table, "separation");
        covs = numericColumn(table, "covariance");
        slope = fitSlope(seps, covs);
    }
    const sc = new Scene(sceneOpts(job, {
        title: "infinite-horizon covariance decay",
        xLabel: "separation |x|", yLabel: "covariance", xKind: "log", yKind: "log",
    }));
    sc.setExtent(seps, covs);
    const logx = seps.map(Math.log);
    const logy = covs.map(Math.log);
    const mx = logx.reduce((a, b) => a + b, 0) / logx.length;
    const my = logy.reduce((a, b) => a + b, 0) / logy.length;
    const intercept = my - slope * mx;
    const fit = [seps[0], seps[seps.length - 1]].map((s) => [s, Math.exp(intercept + slope * Math.log(s))]);
    sc.polyline(fit, "#c33", 1.5);
    sc.scatter(seps.map((s, i) => [s, covs[i]]), "#226", 4);
    const tail = verdictNote ? `, ${verdictNote}` : "";
    sc.note(`fitted slope ${slope.toFixed(3)}${tail}`);
    return sc.render();
}
export function fitSlope(xs, ys) {
    const lx = xs.map(Math.log);
    const ly = ys.map(Math.log);
    const mx = lx.reduce((a, b) => a + b, 0) / lx.length;
    const my = ly.reduce((a, b) => a + b, 0) / ly.length;
    let num = 0, den = 0;
    for (let i = 0; i < lx.length; i++) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) ** 2;
    }
    return num / den;
}
/** Ratio-martingale bracket against the deterministic limit g(tau). */
export function bracketFigure(job) {
    const verdicts = tryLoadVerdicts(job.inputDir);
    const mine = verdicts.filter((v) => v.name.startsWith("6_bracket_limit"));
    if (mine.length === 0)
        return placeholderSvg("no data: bracket verdicts missing");
    const consts = loadConstants(job.inputDir);
    const c0 = consts["c0_a"];
    const dim = consts["dim"];
    const taus = mine.map((v) => v.details["tau"]);
    const est = mine.map((v) => v.details["bracket_estimate"]);
    const ses = mine.map((v) => v.details["se"]);
    const sc = new Scene(sceneOpts(job, {
        title: "ratio-martingale bracket vs g(tau)",
        xLabel: "tau", yLabel: "bracket",
    }));
    const tmax = Math.max(...taus);
    const curve = Array.from({ length: 49 }, (_, k) => {
        const tau = 1 + ((tmax + 0.5 - 1) * k) / 48;
        return [tau, (2 / (dim - 2)) * c0 * (1 - Math.pow(tau, -(dim - 2) / 2))];
    });
    sc.setExtent([1, tmax + 0.5], [0, ...est, ...curve.map((p) => p[1])]);
    sc.polyline(curve, "#c33", 1.5);
    sc.scatter(taus.map((t, i) => [t, est[i]]), "#226", 4);
    sc.errorBars(taus.map((t, i) => [t, est[i], 2.576 * ses[i]]), "#226");
    sc.note("curve: g(tau) from the constants JSON; points: simulated brackets");
    return sc.render();
}
/** Stationarity bookkeeping: equal-time marginals by t, plus the mismatched amplitude. */
export function stationarityFigure(job) {
    const verdicts = tryLoadVerdicts(job.inputDir);
    const v = findVerdict(verdicts, "11_stationarity_identity");
    const mis = findVerdict(verdicts, "11_amplitude_mismatch_diagnostic");
    const byTime = v?.details["by_time"];
    if (!v || !byTime)
        return placeholderSvg("no data: stationarity verdict missing");
    const sc = new Scene(sceneOpts(job, {
        title: "stationary-field bookkeeping at |x - y| = 1",
        xLabel: "t", yLabel: "equal-time covariance",
    }));
    const vals = byTime.map((p) => p[1]);
    const wrong = mis?.details["mismatched_cov"] ?? NaN;
    const all = Number.isFinite(wrong) ? vals.concat([wrong]) : vals;
    sc.setExtent([-0.8, 5.3], [0, ...all]);
    sc.bars(byTime.map(([t, y]) => [t, y]), "#269", 18, byTime.map(([t]) => `t=${t}`));
    if (Number.isFinite(wrong)) {
        sc.bars([[5, wrong]], "#c33", 18, ["mismatch"]);
    }
    sc.note(`max |deviation| ${v.statistic.toExponential(2)} ` +
        `(tolerance ${v.critical.toExponential(0)}, ${v.passed ? "pass" : "fail"})`);
    sc.note("red: additive amplitude without the coupling-strength factor", 1, "#c33");
    return sc.render();
}
export function buildFigure(job) {
    switch (job.kind) {
        case "qq": return qqFigure(job);
        case "variance-vs-t": return varianceVsTFigure(job);
        case "covariance-decay": return covarianceDecayFigure(job);
        case "bracket": return bracketFigure(job);
        case "stationarity": return stationarityFigure(job);
    }
}
