/** Hand-built SVG scenes: axes, series, bars, annotations. Deterministic output. */

export interface Extent { min: number; max: number; }

export type AxisKind = "linear" | "log";

export interface SceneOpts {
  width?: number;
  height?: number;
  title?: string;
  xLabel?: string;
  yLabel?: string;
  xKind?: AxisKind;
  yKind?: AxisKind;
}

const MARGIN = { left: 64, right: 16, top: 34, bottom: 46 };
const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return Number(v.toPrecision(4)).toString();
  return v.toExponential(2);
}

export class Scene {
  readonly w: number;
  readonly h: number;
  private body: string[] = [];
  private xe: Extent = { min: 0, max: 1 };
  private ye: Extent = { min: 0, max: 1 };
  private xKind: AxisKind;
  private yKind: AxisKind;
  private opts: SceneOpts;

  constructor(opts: SceneOpts = {}) {
    this.w = opts.width ?? 640;
    this.h = opts.height ?? 440;
    this.xKind = opts.xKind ?? "linear";
    this.yKind = opts.yKind ?? "linear";
    this.opts = opts;
  }

  setExtent(xs: number[], ys: number[], padFrac = 0.07): void {
    const tx = this.xKind === "log" ? xs.map(Math.log10) : xs;
    const ty = this.yKind === "log" ? ys.map(Math.log10) : ys;
    const pad = (e: Extent): Extent => {
      const span = e.max - e.min || 1;
      return { min: e.min - padFrac * span, max: e.max + padFrac * span };
    };
    this.xe = pad({ min: Math.min(...tx), max: Math.max(...tx) });
    this.ye = pad({ min: Math.min(...ty), max: Math.max(...ty) });
  }

  private px(x: number): number {
    const t = this.xKind === "log" ? Math.log10(x) : x;
    const f = (t - this.xe.min) / (this.xe.max - this.xe.min);
    return MARGIN.left + f * (this.w - MARGIN.left - MARGIN.right);
  }

  private py(y: number): number {
    const t = this.yKind === "log" ? Math.log10(y) : y;
    const f = (t - this.ye.min) / (this.ye.max - this.ye.min);
    return this.h - MARGIN.bottom - f * (this.h - MARGIN.top - MARGIN.bottom);
  }

  polyline(pts: [number, number][], color: string, width = 1.6, dash = ""): void {
    const d = pts.map(([x, y]) => `${this.px(x).toFixed(2)},${this.py(y).toFixed(2)}`).join(" ");
    const dd = dash ? ` stroke-dasharray="${dash}"` : "";
    this.body.push(`<polyline points="${d}" fill="none" stroke="${color}" stroke-width="${width}"${dd}/>`);
  }

  scatter(pts: [number, number][], color: string, r = 3): void {
    for (const [x, y] of pts) {
      this.body.push(`<circle cx="${this.px(x).toFixed(2)}" cy="${this.py(y).toFixed(2)}" r="${r}" fill="${color}"/>`);
    }
  }

  errorBars(pts: [number, number, number][], color: string): void {
    for (const [x, y, e] of pts) {
      const cx = this.px(x).toFixed(2);
      this.body.push(
        `<line x1="${cx}" y1="${this.py(y - e).toFixed(2)}" x2="${cx}" ` +
        `y2="${this.py(y + e).toFixed(2)}" stroke="${color}" stroke-width="1"/>`,
      );
    }
  }

  bars(pts: [number, number][], color: string, halfWidthPx = 18, labels?: string[]): void {
    pts.forEach(([x, y], i) => {
      const cx = this.px(x);
      const y0 = this.py(Math.max(this.yKind === "log" ? 10 ** this.ye.min : 0, 0));
      const y1 = this.py(y);
      this.body.push(
        `<rect x="${(cx - halfWidthPx).toFixed(2)}" y="${Math.min(y0, y1).toFixed(2)}" ` +
        `width="${2 * halfWidthPx}" height="${Math.abs(y0 - y1).toFixed(2)}" ` +
        `fill="${color}" fill-opacity="0.75"/>`,
      );
      if (labels && labels[i]) {
        this.body.push(
          `<text x="${cx.toFixed(2)}" y="${(this.h - MARGIN.bottom + 16).toFixed(2)}" ` +
          `text-anchor="middle" font-size="11" ${FONT}>${esc(labels[i])}</text>`,
        );
      }
    });
  }

  note(text: string, line = 0, color = "#333"): void {
    this.body.push(
      `<text x="${MARGIN.left + 8}" y="${MARGIN.top + 14 + 15 * line}" ` +
      `font-size="12" fill="${color}" ${FONT}>${esc(text)}</text>`,
    );
  }

  private ticks(e: Extent, kind: AxisKind): number[] {
    if (kind === "log") {
      const lo = Math.ceil(e.min), hi = Math.floor(e.max);
      const out: number[] = [];
      for (let p = lo; p <= hi; p++) out.push(10 ** p);
      if (out.length < 2) {
        return [10 ** e.min, 10 ** ((e.min + e.max) / 2), 10 ** e.max];
      }
      return out;
    }
    const span = e.max - e.min;
    const step = 10 ** Math.floor(Math.log10(span / 4));
    const mult = span / step > 8 ? 2 : 1;
    const s = step * mult;
    const out: number[] = [];
    for (let v = Math.ceil(e.min / s) * s; v <= e.max + 1e-12; v += s) out.push(v);
    return out;
  }

  render(): string {
    const parts: string[] = [];
    parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.w}" height="${this.h}" ` +
      `viewBox="0 0 ${this.w} ${this.h}">`,
    );
    parts.push(`<rect width="${this.w}" height="${this.h}" fill="white"/>`);
    const x0 = MARGIN.left, x1 = this.w - MARGIN.right;
    const y0 = this.h - MARGIN.bottom, y1 = MARGIN.top;
    for (const tv of this.ticks(this.xe, this.xKind)) {
      const px = this.px(tv);
      if (px < x0 - 1 || px > x1 + 1) continue;
      parts.push(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y1}" stroke="#eee"/>`);
      parts.push(`<text x="${px.toFixed(2)}" y="${y0 + 16}" text-anchor="middle" font-size="11" ${FONT}>${fmt(tv)}</text>`);
    }
    for (const tv of this.ticks(this.ye, this.yKind)) {
      const py = this.py(tv);
      if (py > y0 + 1 || py < y1 - 1) continue;
      parts.push(`<line x1="${x0}" y1="${py.toFixed(2)}" x2="${x1}" y2="${py.toFixed(2)}" stroke="#eee"/>`);
      parts.push(`<text x="${x0 - 6}" y="${(py + 4).toFixed(2)}" text-anchor="end" font-size="11" ${FONT}>${fmt(tv)}</text>`);
    }
    parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#444"/>`);
    if (this.opts.title) {
      parts.push(`<text x="${this.w / 2}" y="20" text-anchor="middle" font-size="14" ${FONT}>${esc(this.opts.title)}</text>`);
    }
    if (this.opts.xLabel) {
      parts.push(`<text x="${(x0 + x1) / 2}" y="${this.h - 8}" text-anchor="middle" font-size="12" ${FONT}>${esc(this.opts.xLabel)}</text>`);
    }
    if (this.opts.yLabel) {
      parts.push(
        `<text x="14" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" ${FONT} ` +
        `transform="rotate(-90 14 ${(y0 + y1) / 2})">${esc(this.opts.yLabel)}</text>`,
      );
    }
    parts.push(...this.body);
    parts.push("</svg>");
    return parts.join("\n");
  }
}

export function placeholderSvg(message: string, opts: SceneOpts = {}): string {
  const w = opts.width ?? 640, h = opts.height ?? 440;
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" viewBox="0 0 ${w} ${h}">`,
    `<rect width="${w}" height="${h}" fill="white" stroke="#999"/>`,
    `<text x="${w / 2}" y="${h / 2}" text-anchor="middle" font-size="16" fill="#777" ${FONT}>${esc(message)}</text>`,
    "</svg>",
  ].join("\n");
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
