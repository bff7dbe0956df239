import { createHash } from "node:crypto";
import { existsSync, mkdirSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { main } from "../src/cli.js";
import { renderFigure } from "../src/render.js";
import { parseFigureSpec, SchemaError } from "../src/schema.js";

const FIX = join(__dirname, "fixtures");

function outDir(): string {
  return mkdtempSync(join(tmpdir(), "plots-"));
}

function spec(obj: unknown): ReturnType<typeof parseFigureSpec> {
  return parseFigureSpec(JSON.stringify(obj));
}

function sha(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

describe("figure rendering", () => {
  it("renders a population-vs-power sweep (line_sweep)", () => {
    const dir = outDir();
    const s = spec({
      kind: "line_sweep",
      inputs: [join(FIX, "ionization", "ionization.csv")],
      x: "power_dbm",
      y: ["n_q"],
      splitBy: "buffer_on",
      style: { title: "qubit population vs pump power", xLabel: "pump power (dBm)", yLabel: "n_q" },
      output: join(dir, "population.png"),
    });
    const { svgPath, pngPath } = renderFigure(s);
    expect(existsSync(svgPath)).toBe(true);
    expect(readFileSync(pngPath).subarray(1, 4).toString("ascii")).toBe("PNG");
    const caption = JSON.parse(readFileSync(join(dir, "population.caption.json"), "utf8"));
    expect(caption.inputs[0].sha256).toHaveLength(64);
  });

  it("renders an entropy sweep (line_sweep)", () => {
    const dir = outDir();
    const s = spec({
      kind: "line_sweep",
      inputs: [join(FIX, "ionization", "ionization.csv")],
      x: "power_dbm",
      y: ["s2_bits"],
      splitBy: "buffer_on",
      output: join(dir, "entropy.svg"),
    });
    expect(existsSync(renderFigure(s).svgPath)).toBe(true);
  });

  it("renders Floquet overlap curves (line_sweep)", () => {
    const dir = outDir();
    const s = spec({
      kind: "line_sweep",
      inputs: [join(FIX, "floquet", "floquet.csv")],
      x: "power_dbm",
      y: ["overlap_101_nq0", "overlap_101_nq1", "weight_101"],
      output: join(dir, "floquet.svg"),
    });
    expect(existsSync(renderFigure(s).pngPath)).toBe(true);
  });

  it("renders the Husimi heatmap panel", () => {
    const dir = outDir();
    const s = spec({
      kind: "heatmap_panel",
      inputs: [
        join(FIX, "husimi", "husimi_p-70.0dbm_bufoff.csv"),
        join(FIX, "husimi", "husimi_p-64.0dbm_bufoff.csv"),
        join(FIX, "husimi", "husimi_p-70.0dbm_bufon.csv"),
        join(FIX, "husimi", "husimi_p-64.0dbm_bufon.csv"),
      ],
      columns: 2,
      style: { title: "Husimi Q panels" },
      output: join(dir, "husimi.png"),
    });
    const { svgPath, pngPath } = renderFigure(s);
    expect(readFileSync(svgPath, "utf8")).toContain("<rect");
    expect(readFileSync(pngPath).length).toBeGreaterThan(1000);
  });

  it("renders the efficiency/sensitivity panel with solid/dashed pairs", () => {
    const dir = outDir();
    const s = spec({
      kind: "efficiency_panel",
      inputs: [join(FIX, "efficiency", "efficiency_report.csv")],
      style: { title: "detection efficiency and sensitivity" },
      output: join(dir, "eff.png"),
    });
    const { svgPath } = renderFigure(s);
    expect(readFileSync(svgPath, "utf8")).toContain("stroke-dasharray");
  });

  it("re-renders byte-identically", () => {
    const dir = outDir();
    const mk = (sub: string) =>
      spec({
        kind: "efficiency_panel",
        inputs: [join(FIX, "efficiency", "efficiency_report.csv")],
        output: join(dir, sub, "eff.png"),
      });
    const a = join(dir, "a");
    const b = join(dir, "b");
    mkdirSync(a, { recursive: true });
    mkdirSync(b, { recursive: true });
    renderFigure(mk("a"));
    renderFigure(mk("b"));
    expect(sha(join(a, "eff.png"))).toBe(sha(join(b, "eff.png")));
    expect(sha(join(a, "eff.svg"))).toBe(sha(join(b, "eff.svg")));
  });

  it("rejects a CSV with missing columns by name", () => {
    const dir = outDir();
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "a,b\n1,2\n");
    const s = spec({
      kind: "line_sweep",
      inputs: [bad],
      x: "power_dbm",
      y: ["n_q"],
      output: join(dir, "x.svg"),
    });
    expect(() => renderFigure(s)).toThrowError(/missing required column 'power_dbm'/);
  });

  it("accepts an empty-but-valid CSV", () => {
    const dir = outDir();
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, "power_dbm,n_q\n");
    const s = spec({
      kind: "line_sweep",
      inputs: [empty],
      x: "power_dbm",
      y: ["n_q"],
      output: join(dir, "empty.svg"),
    });
    const { svgPath } = renderFigure(s);
    expect(readFileSync(svgPath, "utf8")).toContain("<svg");
  });

  it("rejects malformed spec documents", () => {
    expect(() => parseFigureSpec("{")).toThrow(SchemaError);
    expect(() => parseFigureSpec('{"kind":"pie_chart","inputs":["x"],"output":"y"}')).toThrow(
      SchemaError,
    );
  });

  it("cli runs end to end", () => {
    const dir = outDir();
    const specPath = join(dir, "fig.json");
    writeFileSync(
      specPath,
      JSON.stringify({
        kind: "line_sweep",
        inputs: [join(FIX, "ionization", "ionization.csv")],
        x: "power_dbm",
        y: ["n_q"],
        output: join(dir, "cli.png"),
      }),
    );
    expect(main([specPath])).toBe(0);
    expect(main([join(dir, "missing.json")])).not.toBe(0);
  });
});
