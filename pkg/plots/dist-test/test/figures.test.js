import assert from "node:assert/strict";
import { test } from "node:test";
import { readFileSync, statSync, writeFileSync } from "fs";
import { join } from "path";
import { readCsv, requireColumns } from "../src/csv.js";
import { buildFigure, fitSlope, normInv, qqFigure } from "../src/figures.js";
import { checkManifest, loadJob, FIGURE_KINDS } from "../src/jobs.js";
import { render } from "../src/render.js";
import { gaussians, tempDir, writeManifest, writeSuiteFixture } from "./fixtures.js";
test("csv reader enumerates every missing column", () => {
    const dir = tempDir();
    const p = join(dir, "x.csv");
    writeFileSync(p, "a,b\n1,2\n");
    const t = readCsv(p);
    assert.throws(() => requireColumns(t, ["a", "c", "d"], p), (err) => {
        assert.match(err.message, /c, d/);
        assert.match(err.message, /found: a,/);
        return true;
    });
});
test("normInv round-trips known quantiles", () => {
    assert.ok(Math.abs(normInv(0.975) - 1.959964) < 1e-4);
    assert.ok(Math.abs(normInv(0.5)) < 1e-12);
    assert.ok(Math.abs(normInv(0.005) + 2.575829) < 1e-4);
});
test("qq on synthetic unit normals stays inside the plotted band", () => {
    const dir = tempDir();
    writeManifest(dir);
    const xs = gaussians(42, 2000);
    writeFileSync(join(dir, "fluctuation_samples.csv"), ["replica,sample,noise_var"].concat(xs.map((s, i) => `${i},${s},0`)).join("\n"));
    const svg = qqFigure({ kind: "qq", inputDir: dir, output: join(dir, "qq") });
    assert.match(svg, /standardized by sample moments/);
    // the empirical CDF of the standardized samples stays within the band
    const m = xs.reduce((a, b) => a + b, 0) / xs.length;
    const sd = Math.sqrt(xs.reduce((a, b) => a + (b - m) ** 2, 0) / (xs.length - 1));
    const sorted = xs.map((x) => (x - m) / sd).sort((a, b) => a - b);
    const band = 1.628 / Math.sqrt(xs.length);
    let worst = 0;
    sorted.forEach((v, i) => {
        const p = 0.5 * (1 + erf(v / Math.SQRT2));
        worst = Math.max(worst, Math.abs((i + 0.5) / xs.length - p));
    });
    assert.ok(worst < band, `KS-type deviation ${worst} exceeds band ${band}`);
});
function erf(x) {
    const t = 1 / (1 + 0.3275911 * Math.abs(x));
    const y = 1 - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t -
        0.284496736) * t + 0.254829592) * t * Math.exp(-x * x);
    return x >= 0 ? y : -y;
}
test("covariance-decay on an exact power law labels slope -1.000", () => {
    const dir = tempDir();
    writeManifest(dir);
    const rows = [2, 3, 4, 6, 8].map((r) => `${r},${7 / r}`);
    writeFileSync(join(dir, "covariance_decay.csv"), ["separation,covariance"].concat(rows).join("\n"));
    const svg = buildFigure({ kind: "covariance-decay", inputDir: dir, output: "x" });
    assert.match(svg, /fitted slope -1\.000/);
    assert.ok(Math.abs(fitSlope([1, 2, 4], [7, 3.5, 1.75]) + 1) < 1e-12);
});
test("labels quote the verdict numbers verbatim", () => {
    const dir = tempDir();
    writeSuiteFixture(dir);
    const qq = buildFigure({ kind: "qq", inputDir: dir, output: "x" });
    assert.match(qq, /KS statistic 0\.03125/);
    const decay = buildFigure({ kind: "covariance-decay", inputDir: dir, output: "x" });
    assert.match(decay, /fitted slope -1\.050/);
});
test("all figure kinds render from a suite fixture", async () => {
    const dir = tempDir();
    writeSuiteFixture(dir);
    for (const kind of FIGURE_KINDS) {
        const out = join(dir, kind);
        const res = await render({ kind, inputDir: dir, output: out });
        assert.ok(statSync(res.svgPath).size > 500, `${kind} svg too small`);
        assert.ok(statSync(res.pngPath).size > 500, `${kind} png too small`);
        const svg = readFileSync(res.svgPath, "utf8");
        assert.match(svg, /<svg /);
    }
});
test("renders are byte-stable", async () => {
    const dir = tempDir();
    writeSuiteFixture(dir);
    const a = await render({ kind: "bracket", inputDir: dir, output: join(dir, "a") });
    const b = await render({ kind: "bracket", inputDir: dir, output: join(dir, "b") });
    assert.deepEqual(readFileSync(a.svgPath), readFileSync(b.svgPath));
    assert.deepEqual(readFileSync(a.pngPath), readFileSync(b.pngPath));
});
test("schema mismatch fails fast", async () => {
    const dir = tempDir();
    writeSuiteFixture(dir);
    writeManifest(dir, "999");
    await assert.rejects(render({ kind: "stationarity", inputDir: dir, output: join(dir, "s") }), /schema version mismatch/);
    assert.throws(() => checkManifest(dir), /999/);
});
test("empty data points to a placeholder figure", () => {
    const dir = tempDir();
    writeManifest(dir);
    writeFileSync(join(dir, "fluctuation_samples.csv"), "replica,sample,noise_var\n");
    const svg = buildFigure({ kind: "qq", inputDir: dir, output: "x" });
    assert.match(svg, /no data/);
    const svg2 = buildFigure({ kind: "bracket", inputDir: dir, output: "x" });
    assert.match(svg2, /no data/);
});
test("job toml loading validates kind and required fields", () => {
    const dir = tempDir();
    const p = join(dir, "job.toml");
    writeFileSync(p, `kind = "qq"\ninput_dir = "${dir}"\noutput = "${dir}/out"\nwidth = 700\n`);
    const job = loadJob(p);
    assert.equal(job.kind, "qq");
    assert.equal(job.width, 700);
    writeFileSync(p, `kind = "nope"\ninput_dir = "x"\noutput = "y"\n`);
    assert.throws(() => loadJob(p), /unknown figure kind/);
    writeFileSync(p, `kind = "qq"\n`);
    assert.throws(() => loadJob(p), /input_dir and output/);
});
