/**
 * Marching-squares contour extraction on a regular (possibly non-uniform)
 * rectangular grid, emitting line segments in data coordinates.
 */

export interface GridData {
  xs: number[];
  ys: number[];
  /** z[i][j] is the value at (xs[i], ys[j]). */
  z: number[][];
}

export type Point = [number, number];
export type Segment = [Point, Point];

/** Rebuild the sampling grid from long-format rows (any row order). */
export function gridFromRows(
  rows: Array<Record<string, number | string>>,
  xKey = "x1",
  yKey = "x2",
  zKey = "loss",
): GridData {
  const xs = [...new Set(rows.map((r) => r[xKey] as number))].sort((a, b) => a - b);
  const ys = [...new Set(rows.map((r) => r[yKey] as number))].sort((a, b) => a - b);
  if (xs.length * ys.length !== rows.length) {
    throw new Error(
      `rows do not form a complete grid: ${xs.length} x ${ys.length} axes vs ${rows.length} rows`,
    );
  }
  const xIndex = new Map(xs.map((v, i) => [v, i]));
  const yIndex = new Map(ys.map((v, i) => [v, i]));
  const z: number[][] = xs.map(() => new Array(ys.length).fill(NaN));
  for (const row of rows) {
    z[xIndex.get(row[xKey] as number)!][yIndex.get(row[yKey] as number)!] = row[zKey] as number;
  }
  return { xs, ys, z };
}

/**
 * Segments of the iso-line z = level.  Cells are visited in row-major
 * order, so output is deterministic; saddle cells are disambiguated with
 * the cell-center average.
 */
export function contourSegments(grid: GridData, level: number): Segment[] {
  const { xs, ys, z } = grid;
  const segments: Segment[] = [];

  const interp = (xa: number, ya: number, za: number, xb: number, yb: number, zb: number): Point => {
    const t = za === zb ? 0.5 : (level - za) / (zb - za);
    return [xa + t * (xb - xa), ya + t * (yb - ya)];
  };

  for (let i = 0; i < xs.length - 1; i++) {
    for (let j = 0; j < ys.length - 1; j++) {
      // corners counterclockwise from (i, j)
      const z00 = z[i][j];
      const z10 = z[i + 1][j];
      const z11 = z[i + 1][j + 1];
      const z01 = z[i][j + 1];
      const idx =
        (z00 > level ? 1 : 0) | (z10 > level ? 2 : 0) | (z11 > level ? 4 : 0) | (z01 > level ? 8 : 0);
      if (idx === 0 || idx === 15) continue;

      const bottom = () => interp(xs[i], ys[j], z00, xs[i + 1], ys[j], z10);
      const right = () => interp(xs[i + 1], ys[j], z10, xs[i + 1], ys[j + 1], z11);
      const top = () => interp(xs[i], ys[j + 1], z01, xs[i + 1], ys[j + 1], z11);
      const left = () => interp(xs[i], ys[j], z00, xs[i], ys[j + 1], z01);

      switch (idx) {
        case 1:
        case 14:
          segments.push([left(), bottom()]);
          break;
        case 2:
        case 13:
          segments.push([bottom(), right()]);
          break;
        case 3:
        case 12:
          segments.push([left(), right()]);
          break;
        case 4:
        case 11:
          segments.push([right(), top()]);
          break;
        case 6:
        case 9:
          segments.push([bottom(), top()]);
          break;
        case 7:
        case 8:
          segments.push([left(), top()]);
          break;
        case 5:
        case 10: {
          const center = (z00 + z10 + z11 + z01) / 4;
          const sameAsCase5 = idx === 5 ? center > level : center <= level;
          if (sameAsCase5) {
            segments.push([left(), top()]);
            segments.push([bottom(), right()]);
          } else {
            segments.push([left(), bottom()]);
            segments.push([right(), top()]);
          }
          break;
        }
      }
    }
  }
  return segments;
}
