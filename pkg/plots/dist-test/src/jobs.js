import { readFileSync } from "fs";
import { parse as parseToml } from "smol-toml";
export const SUPPORTED_SCHEMA = "1";
export const FIGURE_KINDS = [
    "qq", "variance-vs-t", "covariance-decay", "bracket", "stationarity",
];
export function loadJob(path) {
    const raw = parseToml(readFileSync(path, "utf8"));
    const kind = raw["kind"];
    if (!FIGURE_KINDS.includes(kind)) {
        throw new Error(`unknown figure kind ${JSON.stringify(raw["kind"])}; ` +
            `supported: ${FIGURE_KINDS.join(", ")}`);
    }
    const inputDir = raw["input_dir"];
    const output = raw["output"];
    if (typeof inputDir !== "string" || typeof output !== "string") {
        throw new Error("job needs string fields input_dir and output");
    }
    const job = { kind, inputDir, output };
    if (typeof raw["width"] === "number")
        job.width = raw["width"];
    if (typeof raw["height"] === "number")
        job.height = raw["height"];
    return job;
}
export function checkManifest(inputDir) {
    const manifest = JSON.parse(readFileSync(`${inputDir}/manifest.json`, "utf8"));
    const version = manifest["schema_version"];
    if (version !== SUPPORTED_SCHEMA) {
        throw new Error(`schema version mismatch: manifest has ${JSON.stringify(version)}, ` +
            `renderer supports ${SUPPORTED_SCHEMA}`);
    }
}
export function loadVerdicts(inputDir) {
    return JSON.parse(readFileSync(`${inputDir}/verdicts.json`, "utf8"));
}
export function tryLoadVerdicts(inputDir) {
    try {
        return loadVerdicts(inputDir);
    }
    catch {
        return [];
    }
}
export function loadConstants(inputDir) {
    return JSON.parse(readFileSync(`${inputDir}/constants.json`, "utf8"));
}
export function findVerdict(verdicts, prefix) {
    return verdicts.find((v) => v.name.startsWith(prefix));
}
