import { colormap, cssColor, SERIES_COLORS } from "./raster.js";

/** Deterministic SVG assembly: fixed-order attributes, fixed precision. */

export interface Margins {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const MARGINS: Margins = { left: 62, right: 16, top: 28, bottom: 44 };

export function fmt(x: number): string {
  if (!isFinite(x)) return "0";
  const s = Math.abs(x) >= 1e4 || (Math.abs(x) < 1e-3 && x !== 0) ? x.toExponential(3) : x.toPrecision(6);
  return String(Number(s));
}

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
    readonly log = false,
  ) {}

  map(v: number): number {
    const [a, b] = this.log ? [Math.log10(this.d0), Math.log10(this.d1)] : [this.d0, this.d1];
    const x = this.log ? Math.log10(Math.max(v, 1e-300)) : v;
    const t = b === a ? 0.5 : (x - a) / (b - a);
    return this.r0 + t * (this.r1 - this.r0);
  }

  ticks(n = 6): number[] {
    if (this.log) {
      const lo = Math.ceil(Math.log10(Math.max(this.d0, 1e-300)));
      const hi = Math.floor(Math.log10(Math.max(this.d1, 1e-300)));
      const out: number[] = [];
      for (let e = lo; e <= hi; e++) out.push(10 ** e);
      return out.length >= 2 ? out : [this.d0, this.d1];
    }
    const span = this.d1 - this.d0;
    if (span <= 0) return [this.d0];
    const step = niceStep(span / n);
    const out: number[] = [];
    for (let v = Math.ceil(this.d0 / step) * step; v <= this.d1 + 1e-12 * Math.abs(span); v += step) {
      out.push(Number(v.toPrecision(12)));
    }
    return out;
  }
}

export function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(raw));
  const r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2 * mag;
  if (r < 7.5) return 5 * mag;
  return 10 * mag;
}

export function dataRange(values: number[], pad = 0.05): [number, number] {
  const finite = values.filter((v) => isFinite(v));
  if (finite.length === 0) return [0, 1];
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const span = hi - lo;
  return [lo - pad * span, hi + pad * span];
}

export class SvgBuilder {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
      `<rect x="0" y="0" width="${width}" height="${height}" fill="white"/>`,
    );
  }

  line(x0: number, y0: number, x1: number, y1: number, color: string, dashed = false, w = 1): void {
    const dash = dashed ? ` stroke-dasharray="5,4"` : "";
    this.parts.push(
      `<line x1="${fmt(x0)}" y1="${fmt(y0)}" x2="${fmt(x1)}" y2="${fmt(y1)}" stroke="${color}" stroke-width="${w}"${dash}/>`,
    );
  }

  polyline(pts: [number, number][], color: string, dashed = false): void {
    if (pts.length === 0) return;
    const d = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const dash = dashed ? ` stroke-dasharray="5,4"` : "";
    this.parts.push(`<polyline points="${d}" fill="none" stroke="${color}" stroke-width="1.5"${dash}/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`);
  }

  text(x: number, y: number, s: string, anchor = "middle", size = 11): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-family="Helvetica,Arial,sans-serif" font-size="${size}" text-anchor="${anchor}">${escapeXml(s)}</text>`,
    );
  }

  finish(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export { colormap, cssColor, SERIES_COLORS };
