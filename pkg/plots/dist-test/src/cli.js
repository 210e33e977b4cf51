#!/usr/bin/env node
import { loadJob, FIGURE_KINDS } from "./jobs.js";
import { render } from "./render.js";
function usage() {
    console.error("usage: pshe-plots render --job job.toml");
    console.error("   or: pshe-plots render-all --input DIR --out DIR");
    console.error(`figure kinds: ${FIGURE_KINDS.join(", ")}`);
    process.exit(2);
}
async function main() {
    const argv = process.argv.slice(2);
    const cmd = argv[0];
    if (cmd === "render") {
        const ji = argv.indexOf("--job");
        if (ji < 0 || !argv[ji + 1])
            usage();
        const job = loadJob(argv[ji + 1]);
        const res = await render(job);
        console.log(`wrote ${res.svgPath} and ${res.pngPath}`);
        return 0;
    }
    if (cmd === "render-all") {
        const ii = argv.indexOf("--input");
        const oi = argv.indexOf("--out");
        if (ii < 0 || oi < 0)
            usage();
        for (const kind of FIGURE_KINDS) {
            const job = {
                kind, inputDir: argv[ii + 1],
                output: `${argv[oi + 1]}/${kind}`,
            };
            const res = await render(job);
            console.log(`wrote ${res.svgPath} and ${res.pngPath}`);
        }
        return 0;
    }
    usage();
}
main().then((code) => process.exit(code), (err) => {
    console.error(String(err?.message ?? err));
    process.exit(1);
});
