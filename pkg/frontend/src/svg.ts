/**
 * Minimal deterministic SVG assembly: linear scales, axes, paths.
 * Coordinates are formatted with fixed precision so identical inputs
 * always produce identical documents.
 */

export const fmt = (v: number): string => {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
};

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  apply(v: number): number {
    return this.r0 + ((v - this.d0) / (this.d1 - this.d0)) * (this.r1 - this.r0);
  }

  ticks(count = 5): number[] {
    const out: number[] = [];
    for (let i = 0; i < count; i++) {
      out.push(this.d0 + (i / (count - 1)) * (this.d1 - this.d0));
    }
    return out;
  }
}

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
  x: LinearScale;
  y: LinearScale;
}

export function makeFrame(
  xDomain: [number, number],
  yDomain: [number, number],
  width = 560,
  height = 520,
): Frame {
  const margin = { top: 34, right: 20, bottom: 46, left: 58 };
  return {
    width,
    height,
    margin,
    x: new LinearScale(xDomain[0], xDomain[1], margin.left, width - margin.right),
    // SVG y runs downward; flip so larger data values sit higher
    y: new LinearScale(yDomain[0], yDomain[1], height - margin.bottom, margin.top),
  };
}

export function axes(frame: Frame, xLabel: string, yLabel: string, title = ""): string {
  const { x, y, width, height, margin } = frame;
  const parts: string[] = [];
  const bottom = height - margin.bottom;
  parts.push(
    `<rect x="${fmt(margin.left)}" y="${fmt(margin.top)}" width="${fmt(width - margin.left - margin.right)}" height="${fmt(bottom - margin.top)}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  for (const tick of x.ticks()) {
    const px = x.apply(tick);
    parts.push(`<line x1="${fmt(px)}" y1="${fmt(bottom)}" x2="${fmt(px)}" y2="${fmt(bottom + 5)}" stroke="#333"/>`);
    parts.push(
      `<text x="${fmt(px)}" y="${fmt(bottom + 18)}" font-size="11" text-anchor="middle" fill="#333">${tick.toPrecision(3)}</text>`,
    );
  }
  for (const tick of y.ticks()) {
    const py = y.apply(tick);
    parts.push(`<line x1="${fmt(margin.left - 5)}" y1="${fmt(py)}" x2="${fmt(margin.left)}" y2="${fmt(py)}" stroke="#333"/>`);
    parts.push(
      `<text x="${fmt(margin.left - 8)}" y="${fmt(py + 4)}" font-size="11" text-anchor="end" fill="#333">${tick.toPrecision(3)}</text>`,
    );
  }
  parts.push(
    `<text x="${fmt((margin.left + width - margin.right) / 2)}" y="${fmt(height - 10)}" font-size="13" text-anchor="middle" fill="#111">${xLabel}</text>`,
  );
  parts.push(
    `<text x="16" y="${fmt((margin.top + bottom) / 2)}" font-size="13" text-anchor="middle" fill="#111" transform="rotate(-90 16 ${fmt((margin.top + bottom) / 2)})">${yLabel}</text>`,
  );
  if (title) {
    parts.push(
      `<text x="${fmt(width / 2)}" y="20" font-size="14" text-anchor="middle" fill="#111">${title}</text>`,
    );
  }
  return parts.join("\n");
}

export function polyline(points: Array<[number, number]>, style: string): string {
  const d = points.map(([px, py], i) => `${i === 0 ? "M" : "L"}${fmt(px)} ${fmt(py)}`).join(" ");
  return `<path d="${d}" fill="none" ${style}/>`;
}

export function svgDocument(width: number, height: number, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    body,
    `</svg>`,
    "",
  ].join("\n");
}

/** Two-stop color ramp (dark blue to warm yellow) for normalized t in [0, 1]. */
export function rampColor(t: number): string {
  const clamp = Math.min(1, Math.max(0, t));
  const lo = [40, 52, 120];
  const hi = [250, 220, 94];
  const mix = lo.map((c, i) => Math.round(c + clamp * (hi[i] - c)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}
