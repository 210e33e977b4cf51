import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
/** Deterministic uniform stream (64-bit LCG) for synthetic sample files. */
export function* lcg(seed) {
    let s = BigInt(seed) & 0xffffffffffffffffn;
    for (;;) {
        s = (s * 6364136223846793005n + 1442695040888963407n) & 0xffffffffffffffffn;
        yield Number(s >> 11n) / 2 ** 53;
    }
}
export function gaussians(seed, n) {
    const u = lcg(seed);
    const out = [];
    while (out.length < n) {
        const a = u.next().value;
        const b = u.next().value;
        const r = Math.sqrt(-2 * Math.log(Math.max(a, 1e-300)));
        out.push(r * Math.cos(2 * Math.PI * b));
        out.push(r * Math.sin(2 * Math.PI * b));
    }
    return out.slice(0, n);
}
export function tempDir() {
    return mkdtempSync(join(tmpdir(), "pshe-plots-"));
}
export function writeManifest(dir, schema = "1") {
    writeFileSync(join(dir, "manifest.json"), JSON.stringify({ schema_version: schema, seed: 1 }));
}
/** A full synthetic suite-output directory covering every figure kind. */
export function writeSuiteFixture(dir) {
    writeManifest(dir);
    const samples = gaussians(7, 400);
    const target = 1.0;
    const csv = ["replica,sample,noise_var"]
        .concat(samples.map((s, i) => `${i},${s},0`)).join("\n");
    writeFileSync(join(dir, "fluctuation_samples.csv"), csv);
    const verdicts = [
        {
            name: "7_pointwise_clt_ks", statistic: 0.03125, critical: 0.0814,
            passed: true, n: 400,
            details: { target_var: target, mean_noise_var: 0.0 },
        },
        {
            name: "8_cov_(1,0)x(1,1)", statistic: 1.0, critical: 3.0, passed: true,
            n: 400,
            details: {
                bracket_cov: 9e-4, se: 1e-4, target: 1e-3,
                point_variances: [
                    { t: 1.0, x_abs: 0.0, variance: 1.85e-3, target: 1.8e-3 },
                    { t: 1.0, x_abs: 1.0, variance: 1.78e-3, target: 1.8e-3 },
                    { t: 2.0, x_abs: 0.0, variance: 1.30e-3, target: 1.273e-3 },
                ],
            },
        },
        {
            name: "9_decorrelation_slope", statistic: 0.05, critical: 0.15,
            passed: true, n: 1000,
            details: {
                slope: -1.05, slope_ci: [-1.1, -1.0],
                separations: [2, 3, 4, 6, 8],
                covariances: [1.6e-3, 1.05e-3, 8.1e-4, 5.2e-4, 4.1e-4],
                cov_ses: [1e-5, 1e-5, 1e-5, 1e-5, 1e-5],
            },
        },
        {
            name: "6_bracket_limit_tau2", statistic: 0.01, critical: 0.15,
            passed: true, n: 200,
            details: { tau: 2.0, bracket_estimate: 5.3e-4, se: 1e-5, g_target: 5.3e-4 },
        },
        {
            name: "6_bracket_limit_tau4", statistic: 0.02, critical: 0.15,
            passed: true, n: 200,
            details: { tau: 4.0, bracket_estimate: 9.1e-4, se: 1.5e-5, g_target: 9.05e-4 },
        },
        {
            name: "11_stationarity_identity", statistic: 5e-16, critical: 1e-6,
            passed: true, n: 2,
            details: {
                base_cov: 1.39e-3,
                by_time: [[0.0, 1.39e-3], [1.0, 1.39e-3], [4.0, 1.39e-3]],
            },
        },
        {
            name: "11_amplitude_mismatch_diagnostic", statistic: 0.0369,
            critical: null, passed: true, n: 1,
            details: { mismatched_cov: 0.0383, gbar_sq: 1.007 },
        },
    ];
    writeFileSync(join(dir, "verdicts.json"), JSON.stringify(verdicts));
    writeFileSync(join(dir, "constants.json"), JSON.stringify({
        beta: 0.2, dim: 3, gamma_sq: 0.0403, c0_a: 9.05e-4, c0_b: 9.05e-4,
    }));
}
