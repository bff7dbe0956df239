import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import { column, readCsv, Table } from "./csv.js";
import { Canvas, colormap, cssColor, SERIES_COLORS } from "./raster.js";
import { FigureSpec, SchemaError } from "./schema.js";
import { dataRange, fmt, LinearScale, MARGINS, SvgBuilder } from "./svg.js";

interface Series {
  label: string;
  x: number[];
  y: number[];
  dashed: boolean;
  axis: "left" | "right";
}

function axes(
  svg: SvgBuilder,
  png: Canvas,
  sx: LinearScale,
  sy: LinearScale,
  spec: FigureSpec,
): void {
  const { left, top } = MARGINS;
  const right = spec.style.width - MARGINS.right;
  const bottom = spec.style.height - MARGINS.bottom;
  const black: [number, number, number] = [0, 0, 0];
  svg.line(left, bottom, right, bottom, "black");
  svg.line(left, top, left, bottom, "black");
  png.line(left, bottom, right, bottom, black);
  png.line(left, top, left, bottom, black);
  for (const t of sx.ticks()) {
    const x = sx.map(t);
    svg.line(x, bottom, x, bottom + 4, "black");
    svg.text(x, bottom + 16, fmt(t));
    png.line(x, bottom, x, bottom + 4, black);
    png.text(x - 3 * fmt(t).length, bottom + 8, fmt(t), black);
  }
  for (const t of sy.ticks()) {
    const y = sy.map(t);
    svg.line(left - 4, y, left, y, "black");
    svg.text(left - 7, y + 4, fmt(t), "end");
    png.line(left - 4, y, left, y, black);
    png.text(left - 6 - 6 * fmt(t).length, y - 3, fmt(t), black);
  }
  if (spec.style.title) svg.text((left + right) / 2, 16, spec.style.title, "middle", 13);
  if (spec.style.xLabel) svg.text((left + right) / 2, spec.style.height - 8, spec.style.xLabel);
  if (spec.style.yLabel) {
    svg.text(14, (top + bottom) / 2, spec.style.yLabel, "middle");
  }
}

function drawSeries(svg: SvgBuilder, png: Canvas, series: Series[], spec: FigureSpec): void {
  const { left, top } = MARGINS;
  const right = spec.style.width - MARGINS.right;
  const bottom = spec.style.height - MARGINS.bottom;
  const xs = series.flatMap((s) => s.x);
  const ys = series.filter((s) => s.axis === "left").flatMap((s) => s.y);
  const sx = new LinearScale(...dataRange(xs, 0.02), left, right);
  const syl = new LinearScale(...dataRange(ys), bottom, top, spec.style.logY);
  axes(svg, png, sx, syl, spec);
  const rys = series.filter((s) => s.axis === "right").flatMap((s) => s.y);
  const syr = rys.length ? new LinearScale(...dataRange(rys), bottom, top, spec.style.logY) : syl;
  series.forEach((s, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    const sy = s.axis === "right" ? syr : syl;
    const pts: [number, number][] = s.x.map((xv, k) => [sx.map(xv), sy.map(s.y[k])]);
    svg.polyline(pts, cssColor(color), s.dashed);
    for (let k = 1; k < pts.length; k++) {
      if (s.dashed) png.dashedLine(pts[k - 1][0], pts[k - 1][1], pts[k][0], pts[k][1], color);
      else png.line(pts[k - 1][0], pts[k - 1][1], pts[k][0], pts[k][1], color);
    }
    svg.text(right - 4, top + 14 + 13 * i, s.label, "end");
  });
}

function lineSweepSeries(spec: FigureSpec): Series[] {
  if (!spec.x || !spec.y || spec.y.length === 0) {
    throw new SchemaError("line_sweep requires 'x' and a nonempty 'y' column list");
  }
  const out: Series[] = [];
  for (const input of spec.inputs) {
    const table = readCsv(input, [spec.x, ...spec.y]);
    const groups = splitRows(table, spec.splitBy);
    for (const [gname, rows] of groups) {
      for (const ycol of spec.y) {
        const xs = rows.map((r) => r[spec.x as string]);
        const ys = rows.map((r) => r[ycol]);
        const label = [basename(input, ".csv"), gname, ycol].filter(Boolean).join(" ");
        out.push({ label, x: xs, y: ys, dashed: false, axis: "left" });
      }
    }
  }
  return out;
}

function splitRows(
  table: Table,
  splitBy: string | undefined,
): [string, Record<string, number>[]][] {
  if (!splitBy) return [["", table.rows]];
  if (!table.columns.includes(splitBy)) {
    throw new SchemaError(`missing split column '${splitBy}'`);
  }
  const groups = new Map<number, Record<string, number>[]>();
  for (const r of table.rows) {
    const k = r[splitBy];
    if (!groups.has(k)) groups.set(k, []);
    groups.get(k)!.push(r);
  }
  return [...groups.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([k, rows]) => [`${splitBy}=${k}`, rows]);
}

function renderLineSweep(spec: FigureSpec): { svg: string; png: Buffer } {
  const svg = new SvgBuilder(spec.style.width, spec.style.height);
  const png = new Canvas(spec.style.width, spec.style.height);
  drawSeries(svg, png, lineSweepSeries(spec), spec);
  return { svg: svg.finish(), png: png.toPng() };
}

function renderEfficiencyPanel(spec: FigureSpec): { svg: string; png: Buffer } {
  const pairs = spec.pairs ?? [
    { solid: "eta_det", dashed: "eta_det_ti", axis: "left" as const },
    { solid: "s_w_sqrthz", dashed: "s_ti_w_sqrthz", axis: "right" as const },
  ];
  const x = spec.x ?? "power_dbm";
  const series: Series[] = [];
  for (const input of spec.inputs) {
    const cols = pairs.flatMap((p) => [p.solid, p.dashed]);
    const table = readCsv(input, [x, ...cols]);
    const xs = column(table, x);
    for (const p of pairs) {
      series.push({
        label: `${basename(input, ".csv")} ${p.solid}`,
        x: xs,
        y: column(table, p.solid),
        dashed: false,
        axis: p.axis,
      });
      series.push({
        label: `${basename(input, ".csv")} ${p.dashed}`,
        x: xs,
        y: column(table, p.dashed),
        dashed: true,
        axis: p.axis,
      });
    }
  }
  const svg = new SvgBuilder(spec.style.width, spec.style.height);
  const png = new Canvas(spec.style.width, spec.style.height);
  drawSeries(svg, png, series, spec);
  return { svg: svg.finish(), png: png.toPng() };
}

function renderHeatmapPanel(spec: FigureSpec): { svg: string; png: Buffer } {
  const ncols = Math.min(spec.columns, spec.inputs.length);
  const nrows = Math.ceil(spec.inputs.length / ncols);
  const cell = 150;
  const pad = 10;
  const width = ncols * (cell + pad) + pad;
  const height = nrows * (cell + pad) + pad + 18;
  const svg = new SvgBuilder(width, height);
  const png = new Canvas(width, height);
  spec.inputs.forEach((input, idx) => {
    const table = readCsv(input, ["re", "im", "q"]);
    const res = [...new Set(table.rows.map((r) => r.re))].sort((a, b) => a - b);
    const ims = [...new Set(table.rows.map((r) => r.im))].sort((a, b) => a - b);
    const qmax = Math.max(...table.rows.map((r) => r.q), 1e-300);
    const ix0 = pad + (idx % ncols) * (cell + pad);
    const iy0 = pad + Math.floor(idx / ncols) * (cell + pad);
    const px = cell / res.length;
    const py = cell / ims.length;
    const reIndex = new Map(res.map((v, i) => [v, i]));
    const imIndex = new Map(ims.map((v, i) => [v, i]));
    for (const r of table.rows) {
      const cx = ix0 + (reIndex.get(r.re) as number) * px;
      // imaginary axis points up
      const cy = iy0 + cell - ((imIndex.get(r.im) as number) + 1) * py;
      const rgb = colormap(r.q / qmax);
      svg.rect(cx, cy, px + 0.5, py + 0.5, cssColor(rgb));
      png.rect(cx, cy, cx + px, cy + py, rgb);
    }
    svg.text(ix0 + cell / 2, iy0 + cell + 13, basename(input, ".csv"), "middle", 9);
  });
  if (spec.style.title) svg.text(width / 2, height - 4, spec.style.title, "middle", 12);
  return { svg: svg.finish(), png: png.toPng() };
}

export function renderFigure(spec: FigureSpec): { svgPath: string; pngPath: string } {
  let result: { svg: string; png: Buffer };
  switch (spec.kind) {
    case "line_sweep":
      result = renderLineSweep(spec);
      break;
    case "efficiency_panel":
      result = renderEfficiencyPanel(spec);
      break;
    case "heatmap_panel":
      result = renderHeatmapPanel(spec);
      break;
  }
  const base = spec.output.replace(/\.(png|svg)$/i, "");
  const svgPath = `${base}.svg`;
  const pngPath = `${base}.png`;
  writeFileSync(svgPath, result.svg);
  writeFileSync(pngPath, result.png);
  const caption = {
    kind: spec.kind,
    inputs: spec.inputs.map((p) => ({
      path: p,
      sha256: createHash("sha256").update(readFileSync(p)).digest("hex"),
    })),
    outputs: [basename(svgPath), basename(pngPath)],
    title: spec.style.title,
  };
  writeFileSync(`${base}.caption.json`, JSON.stringify(caption, null, 1) + "\n");
  return { svgPath, pngPath };
}
