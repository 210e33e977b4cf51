import { readFileSync } from "fs";
import { parse as parseToml } from "smol-toml";

export const SUPPORTED_SCHEMA = "1";

export type FigureKind =
  | "qq"
  | "variance-vs-t"
  | "covariance-decay"
  | "bracket"
  | "stationarity";

export const FIGURE_KINDS: FigureKind[] = [
  "qq", "variance-vs-t", "covariance-decay", "bracket", "stationarity",
];

export interface FigureJob {
  kind: FigureKind;
  /** Directory holding verdicts.json / constants.json / manifest.json / CSVs. */
  inputDir: string;
  /** Output path base; .svg and .png are appended. */
  output: string;
  width?: number;
  height?: number;
}

export function loadJob(path: string): FigureJob {
  const raw = parseToml(readFileSync(path, "utf8")) as Record<string, unknown>;
  const kind = raw["kind"] as FigureKind;
  if (!FIGURE_KINDS.includes(kind)) {
    throw new Error(`unknown figure kind ${JSON.stringify(raw["kind"])}; ` +
      `supported: ${FIGURE_KINDS.join(", ")}`);
  }
  const inputDir = raw["input_dir"];
  const output = raw["output"];
  if (typeof inputDir !== "string" || typeof output !== "string") {
    throw new Error("job needs string fields input_dir and output");
  }
  const job: FigureJob = { kind, inputDir, output };
  if (typeof raw["width"] === "number") job.width = raw["width"];
  if (typeof raw["height"] === "number") job.height = raw["height"];
  return job;
}

export interface Verdict {
  name: string;
  statistic: number;
  critical: number;
  passed: boolean;
  n: number;
  details: Record<string, unknown>;
}

export function checkManifest(inputDir: string): void {
  const manifest = JSON.parse(readFileSync(`${inputDir}/manifest.json`, "utf8"));
  const version = manifest["schema_version"];
  if (version !== SUPPORTED_SCHEMA) {
    throw new Error(
      `schema version mismatch: manifest has ${JSON.stringify(version)}, ` +
      `renderer supports ${SUPPORTED_SCHEMA}`,
    );
  }
}

export function loadVerdicts(inputDir: string): Verdict[] {
  return JSON.parse(readFileSync(`${inputDir}/verdicts.json`, "utf8"));
}

export function tryLoadVerdicts(inputDir: string): Verdict[] {
  try {
    return loadVerdicts(inputDir);
  } catch {
    return [];
  }
}

export function loadConstants(inputDir: string): Record<string, number> {
  return JSON.parse(readFileSync(`${inputDir}/constants.json`, "utf8"));
}

export function findVerdict(verdicts: Verdict[], prefix: string): Verdict | undefined {
  return verdicts.find((v) => v.name.startsWith(prefix));
}
