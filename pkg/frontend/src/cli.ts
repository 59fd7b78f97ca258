/**
 * Figure CLI: reads the laboratory's CSV exports, writes an SVG.
 *
 *   node dist/cli.js --kind quiver --input field.csv --out field.svg
 *   node dist/cli.js --kind contour --input landscape.csv --out contour.svg
 *   node dist/cli.js --kind landscape3d --input landscape.csv --out surface.svg
 *   node dist/cli.js --kind trajectory-overlay --input field.csv --input trajectory.csv --out flow.svg
 *   node dist/cli.js --kind trace-curves --input trace.csv --out trace.svg
 *
 * Exit codes: 0 success, 1 runtime error (bad schema, unreadable file),
 * 2 usage error.
 */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { loadField, loadLandscape, loadTrace, loadTrajectory } from "./csv.js";
import {
  renderContour,
  renderQuiver,
  renderSurface,
  renderTraceCurves,
  renderTrajectoryOverlay,
  type FigureOptions,
} from "./figures.js";

const KINDS = ["landscape3d", "contour", "quiver", "trajectory-overlay", "trace-curves"] as const;
type Kind = (typeof KINDS)[number];

class UsageError extends Error {}

function render(kind: Kind, inputs: string[], opts: FigureOptions): string {
  switch (kind) {
    case "quiver":
      return renderQuiver(loadField(inputs[0]), opts);
    case "contour":
      return renderContour(loadLandscape(inputs[0]), opts);
    case "landscape3d":
      return renderSurface(loadLandscape(inputs[0]), opts);
    case "trajectory-overlay": {
      if (inputs.length < 2) {
        throw new UsageError("trajectory-overlay needs --input field.csv --input trajectory.csv");
      }
      return renderTrajectoryOverlay(loadField(inputs[0]), loadTrajectory(inputs[1]), opts);
    }
    case "trace-curves":
      return renderTraceCurves(loadTrace(inputs[0]), opts);
  }
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        input: { type: "string", multiple: true },
        kind: { type: "string" },
        out: { type: "string" },
        "arrow-scale": { type: "string" },
        width: { type: "string" },
        height: { type: "string" },
        title: { type: "string" },
        xlabel: { type: "string" },
        ylabel: { type: "string" },
      },
      allowPositionals: false,
    });
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 2;
  }
  const values = parsed.values;
  try {
    const inputs = values.input ?? [];
    const kind = values.kind as Kind | undefined;
    if (!kind || !KINDS.includes(kind)) {
      throw new UsageError(`--kind must be one of ${KINDS.join(", ")}`);
    }
    if (inputs.length === 0) {
      throw new UsageError("--input FILE is required");
    }
    if (!values.out) {
      throw new UsageError("--out FILE is required");
    }
    const arrowScale = values["arrow-scale"] ? Number(values["arrow-scale"]) : 1.0;
    if (!Number.isFinite(arrowScale) || arrowScale <= 0) {
      throw new UsageError(`--arrow-scale must be a positive number, got ${values["arrow-scale"]}`);
    }
    const opts: FigureOptions = {
      arrowScale,
      width: values.width ? Number(values.width) : undefined,
      height: values.height ? Number(values.height) : undefined,
      title: values.title,
      xLabel: values.xlabel,
      yLabel: values.ylabel,
    };
    const svg = render(kind, inputs, opts);
    writeFileSync(values.out, svg);
    console.log(`wrote ${values.out}`);
    return 0;
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`usage error: ${err.message}`);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
