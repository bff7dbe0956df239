import { z } from "zod";

/** Figure specification document: what to draw, from which CSVs, where. */
export const figureSpecSchema = z
  .object({
    kind: z.enum(["line_sweep", "heatmap_panel", "efficiency_panel"]),
    inputs: z.array(z.string()).min(1),
    output: z.string(),
    style: z
      .object({
        title: z.string().default(""),
        xLabel: z.string().default(""),
        yLabel: z.string().default(""),
        logY: z.boolean().default(false),
        width: z.number().int().positive().default(640),
        height: z.number().int().positive().default(420),
      })
      .default({}),
    // line_sweep: which columns to plot
    x: z.string().optional(),
    y: z.array(z.string()).optional(),
    // optional column whose distinct values split rows into separate series
    splitBy: z.string().optional(),
    // heatmap_panel: panel grid shape
    columns: z.number().int().positive().default(4),
    // efficiency_panel: which CSV columns carry raw/corrected pairs
    pairs: z
      .array(z.object({ solid: z.string(), dashed: z.string(), axis: z.enum(["left", "right"]).default("left") }))
      .optional(),
  })
  .strict();

export type FigureSpec = z.infer<typeof figureSpecSchema>;

export class SchemaError extends Error {}

export function parseFigureSpec(text: string): FigureSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`spec is not valid JSON: ${(e as Error).message}`);
  }
  const res = figureSpecSchema.safeParse(raw);
  if (!res.success) {
    throw new SchemaError(res.error.issues.map((i) => `${i.path.join(".")}: ${i.message}`).join("; "));
  }
  return res.data;
}
