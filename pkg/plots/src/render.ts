import { mkdirSync, writeFileSync } from "fs";
import { dirname } from "path";

import { buildFigure } from "./figures.js";
import { checkManifest, FigureJob } from "./jobs.js";

export interface RenderResult {
  svgPath: string;
  pngPath: string;
}

/** Build the figure for a job and write both SVG and PNG next to each other. */
export async function render(job: FigureJob, skipManifest = false): Promise<RenderResult> {
  if (!skipManifest) checkManifest(job.inputDir);
  const svg = buildFigure(job);
  const svgPath = `${job.output}.svg`;
  const pngPath = `${job.output}.png`;
  mkdirSync(dirname(svgPath), { recursive: true });
  writeFileSync(svgPath, svg, "utf8");
  const { Resvg } = await import("@resvg/resvg-js");
  const png = new Resvg(svg, { fitTo: { mode: "zoom", value: 2 } }).render().asPng();
  writeFileSync(pngPath, png);
  return { svgPath, pngPath };
}
