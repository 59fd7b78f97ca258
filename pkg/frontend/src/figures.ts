/**
 * Figure renderers for the laboratory's CSV exports.
 *
 * All figures are plain SVG strings, deterministic for identical inputs.
 * Quiver arrows are drawn as descent directions (-grad, red), so every
 * arrow points into the (+x1, -x2) quadrant; arrow length encodes the
 * gradient magnitude times --arrow-scale.  Contours include the exact
 * log(2) level, which runs along the diagonal x1 = x2.
 */

import type { FieldRow, LandscapeRow, TraceRow, TrajectoryRow } from "./csv.js";
import { contourSegments, gridFromRows, type GridData, type Segment } from "./contour.js";
import { axes, fmt, LinearScale, makeFrame, polyline, rampColor, svgDocument, type Frame } from "./svg.js";

export const LOG2 = Math.log(2);

export interface FigureOptions {
  width?: number;
  height?: number;
  arrowScale?: number;
  xLabel?: string;
  yLabel?: string;
  title?: string;
}

const defaults = (opts: FigureOptions) => ({
  width: opts.width ?? 560,
  height: opts.height ?? 520,
  arrowScale: opts.arrowScale ?? 1.0,
  xLabel: opts.xLabel ?? "preferred ratio x1",
  yLabel: opts.yLabel ?? "dispreferred ratio x2",
  title: opts.title ?? "",
});

function extent(values: number[]): [number, number] {
  return [Math.min(...values), Math.max(...values)];
}

// -- quiver -----------------------------------------------------------------

export interface Arrow {
  x: number;
  y: number;
  /** displacement in data coordinates (descent direction) */
  dx: number;
  dy: number;
}

/** Descent arrows in data coordinates; exposed for the direction tests. */
export function computeArrows(rows: FieldRow[], arrowScale: number): Arrow[] {
  return rows.map((r) => ({
    x: r.x1,
    y: r.x2,
    dx: r.dir_x1 * r.grad_norm * arrowScale,
    dy: r.dir_x2 * r.grad_norm * arrowScale,
  }));
}

function arrowMarks(arrows: Arrow[], frame: Frame): string {
  const parts: string[] = [];
  for (const a of arrows) {
    const x0 = frame.x.apply(a.x);
    const y0 = frame.y.apply(a.y);
    const x1 = frame.x.apply(a.x + a.dx);
    const y1 = frame.y.apply(a.y + a.dy);
    parts.push(
      `<line x1="${fmt(x0)}" y1="${fmt(y0)}" x2="${fmt(x1)}" y2="${fmt(y1)}" stroke="#cc1111" stroke-width="1.2"/>`,
    );
    // arrowhead: two barbs at 150 degrees off the shaft
    const angle = Math.atan2(y1 - y0, x1 - x0);
    const barb = 4.5;
    for (const offset of [Math.PI * (5 / 6), -Math.PI * (5 / 6)]) {
      const bx = x1 + barb * Math.cos(angle + offset);
      const by = y1 + barb * Math.sin(angle + offset);
      parts.push(
        `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(bx)}" y2="${fmt(by)}" stroke="#cc1111" stroke-width="1.2"/>`,
      );
    }
  }
  return parts.join("\n");
}

export function renderQuiver(rows: FieldRow[], opts: FigureOptions = {}): string {
  const o = defaults(opts);
  const frame = makeFrame(
    extent(rows.map((r) => r.x1)),
    extent(rows.map((r) => r.x2)),
    o.width,
    o.height,
  );
  const body = [
    axes(frame, o.xLabel, o.yLabel, o.title || "gradient field (descent directions)"),
    arrowMarks(computeArrows(rows, o.arrowScale), frame),
  ].join("\n");
  return svgDocument(o.width, o.height, body);
}

// -- contour ----------------------------------------------------------------

export interface ContourSet {
  level: number;
  segments: Segment[];
}

/** Contour levels: evenly spaced interior levels plus the exact log(2). */
export function computeContours(grid: GridData, levels = 9): ContourSet[] {
  const flat = grid.z.flat();
  const [zMin, zMax] = extent(flat);
  const sets: ContourSet[] = [];
  for (let i = 1; i <= levels; i++) {
    const level = zMin + (i / (levels + 1)) * (zMax - zMin);
    sets.push({ level, segments: contourSegments(grid, level) });
  }
  if (zMin < LOG2 && LOG2 < zMax) {
    sets.push({ level: LOG2, segments: contourSegments(grid, LOG2) });
  }
  return sets;
}

export function renderContour(rows: LandscapeRow[], opts: FigureOptions = {}): string {
  const o = defaults(opts);
  const grid = gridFromRows(rows);
  const frame = makeFrame(extent(grid.xs), extent(grid.ys), o.width, o.height);
  const [zMin, zMax] = extent(grid.z.flat());
  const parts: string[] = [axes(frame, o.xLabel, o.yLabel, o.title || "loss landscape (contours)")];
  for (const { level, segments } of computeContours(grid)) {
    const isLog2 = level === LOG2;
    const color = isLog2 ? "#cc1111" : rampColor((level - zMin) / (zMax - zMin));
    const dash = isLog2 ? ' stroke-dasharray="6 3"' : "";
    for (const [[ax, ay], [bx, by]] of segments) {
      parts.push(
        `<line x1="${fmt(frame.x.apply(ax))}" y1="${fmt(frame.y.apply(ay))}" x2="${fmt(frame.x.apply(bx))}" y2="${fmt(frame.y.apply(by))}" stroke="${color}" stroke-width="${isLog2 ? 1.8 : 1.2}"${dash}/>`,
      );
    }
  }
  parts.push(
    `<text x="${fmt(o.width - 24)}" y="${fmt(30)}" font-size="11" text-anchor="end" fill="#cc1111">log 2 level (x1 = x2)</text>`,
  );
  return svgDocument(o.width, o.height, parts.join("\n"));
}

// -- isometric surface --------------------------------------------------------

/** Project normalized (nx, ny, nz) to the drawing plane (simple isometric). */
function isoProject(nx: number, ny: number, nz: number): [number, number] {
  return [(nx - ny) * 0.5, (nx + ny) * 0.28 - nz * 0.55];
}

export function renderSurface(rows: LandscapeRow[], opts: FigureOptions = {}): string {
  const o = defaults(opts);
  const grid = gridFromRows(rows);
  const [xMin, xMax] = extent(grid.xs);
  const [yMin, yMax] = extent(grid.ys);
  const [zMin, zMax] = extent(grid.z.flat());
  const nx = (v: number) => (v - xMin) / (xMax - xMin);
  const ny = (v: number) => (v - yMin) / (yMax - yMin);
  const nz = (v: number) => (v - zMin) / (zMax - zMin);

  const projected = grid.xs.map((xv, i) =>
    grid.ys.map((yv, j) => isoProject(nx(xv), ny(yv), nz(grid.z[i][j]))),
  );
  const us = projected.flat().map((p) => p[0]);
  const vs = projected.flat().map((p) => p[1]);
  const frame = makeFrame(extent(us), extent(vs), o.width, o.height);

  interface Quad {
    depth: number;
    path: string;
    fill: string;
  }
  const quads: Quad[] = [];
  for (let i = 0; i < grid.xs.length - 1; i++) {
    for (let j = 0; j < grid.ys.length - 1; j++) {
      const corners = [
        projected[i][j],
        projected[i + 1][j],
        projected[i + 1][j + 1],
        projected[i][j + 1],
      ];
      const zMean = (grid.z[i][j] + grid.z[i + 1][j] + grid.z[i + 1][j + 1] + grid.z[i][j + 1]) / 4;
      const d = corners
        .map(([u, v], k) => `${k === 0 ? "M" : "L"}${fmt(frame.x.apply(u))} ${fmt(frame.y.apply(v))}`)
        .join(" ");
      quads.push({
        // painter order: larger projected v (screen-lower) drawn later
        depth: (corners[0][1] + corners[2][1]) / 2,
        path: `${d} Z`,
        fill: rampColor(nz(zMean)),
      });
    }
  }
  quads.sort((a, b) => a.depth - b.depth);
  const body = [
    `<text x="${fmt(o.width / 2)}" y="20" font-size="14" text-anchor="middle" fill="#111">${o.title || "loss landscape (surface)"}</text>`,
    ...quads.map((q) => `<path d="${q.path}" fill="${q.fill}" stroke="#444" stroke-width="0.4"/>`),
    `<text x="${fmt(o.width - 20)}" y="${fmt(o.height - 14)}" font-size="11" text-anchor="end" fill="#333">height = loss(${o.xLabel}, ${o.yLabel})</text>`,
  ].join("\n");
  return svgDocument(o.width, o.height, body);
}

// -- trajectory overlay -------------------------------------------------------

export function renderTrajectoryOverlay(
  fieldRows: FieldRow[],
  trajectoryRows: TrajectoryRow[],
  opts: FigureOptions = {},
): string {
  const o = defaults(opts);
  const frame = makeFrame(
    extent(fieldRows.map((r) => r.x1)),
    extent(fieldRows.map((r) => r.x2)),
    o.width,
    o.height,
  );
  const path = trajectoryRows.map(
    (r) => [frame.x.apply(r.x1), frame.y.apply(r.x2)] as [number, number],
  );
  const start = path[0];
  const end = path[path.length - 1];
  const body = [
    axes(frame, o.xLabel, o.yLabel, o.title || "gradient flow over the descent field"),
    arrowMarks(computeArrows(fieldRows, o.arrowScale), frame),
    polyline(path, 'stroke="#1155cc" stroke-width="2"'),
    `<circle cx="${fmt(start[0])}" cy="${fmt(start[1])}" r="4" fill="#1155cc"/>`,
    `<circle cx="${fmt(end[0])}" cy="${fmt(end[1])}" r="4" fill="white" stroke="#1155cc" stroke-width="2"/>`,
  ].join("\n");
  return svgDocument(o.width, o.height, body);
}

// -- training curves ----------------------------------------------------------

export function renderTraceCurves(rows: TraceRow[], opts: FigureOptions = {}): string {
  const o = defaults(opts);
  const width = o.width;
  const height = o.height;
  const steps = rows.map((r) => r.step);
  const panel = (
    yValues: Array<{ label: string; values: number[]; color: string }>,
    top: number,
    bottom: number,
    yLabel: string,
  ): string => {
    const all = yValues.flatMap((s) => s.values);
    const x = new LinearScale(Math.min(...steps), Math.max(...steps), 58, width - 20);
    const lo = Math.min(...all);
    const hi = Math.max(...all);
    const pad = (hi - lo || 1) * 0.05;
    const y = new LinearScale(lo - pad, hi + pad, bottom, top);
    const parts: string[] = [
      `<rect x="58" y="${fmt(top)}" width="${fmt(width - 78)}" height="${fmt(bottom - top)}" fill="none" stroke="#333"/>`,
      `<text x="16" y="${fmt((top + bottom) / 2)}" font-size="12" text-anchor="middle" fill="#111" transform="rotate(-90 16 ${fmt((top + bottom) / 2)})">${yLabel}</text>`,
    ];
    yValues.forEach((series, index) => {
      parts.push(
        polyline(
          series.values.map((v, i) => [x.apply(steps[i]), y.apply(v)] as [number, number]),
          `stroke="${series.color}" stroke-width="1.8"`,
        ),
      );
      parts.push(
        `<text x="${fmt(width - 24)}" y="${fmt(top + 16 + 14 * index)}" font-size="11" text-anchor="end" fill="${series.color}">${series.label}</text>`,
      );
    });
    return parts.join("\n");
  };

  const mid = Math.floor(height / 2);
  const body = [
    `<text x="${fmt(width / 2)}" y="20" font-size="14" text-anchor="middle" fill="#111">${o.title || "training trace"}</text>`,
    panel(
      [
        { label: "pi_w (preferred)", values: rows.map((r) => r.pi_w), color: "#1155cc" },
        { label: "pi_l (dispreferred)", values: rows.map((r) => r.pi_l), color: "#cc7711" },
      ],
      38,
      mid - 12,
      "probability",
    ),
    panel(
      [
        { label: "loss", values: rows.map((r) => r.loss), color: "#111111" },
        { label: "margin", values: rows.map((r) => r.margin), color: "#11aa55" },
      ],
      mid + 16,
      height - 40,
      "loss / margin",
    ),
    `<text x="${fmt(width / 2)}" y="${fmt(height - 12)}" font-size="13" text-anchor="middle" fill="#111">step</text>`,
  ].join("\n");
  return svgDocument(width, height, body);
}
