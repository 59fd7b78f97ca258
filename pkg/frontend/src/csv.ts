/**
 * Strict loaders for the laboratory's CSV exports.
 *
 * Headers must match the documented schemas exactly; numeric cells are
 * validated as finite.  Loading never mutates the input files.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const LANDSCAPE_HEADER = ["x1", "x2", "loss"] as const;
export const FIELD_HEADER = [
  "x1", "x2", "loss", "g_x1", "g_x2", "grad_norm", "dir_x1", "dir_x2", "ratio", "region",
] as const;
export const TRAJECTORY_HEADER = [
  "t", "x1", "x2", "loss", "g_x1", "g_x2", "grad_norm", "ratio",
] as const;
export const TRACE_HEADER = [
  "step", "loss", "pi_w", "pi_l", "x1", "x2", "margin", "rest_mass", "grad_norm", "d_pi_w", "d_pi_l",
] as const;

/** Columns that hold labels rather than numbers. */
const TEXT_COLUMNS = new Set(["region", "termination"]);

export type Row = Record<string, number | string>;

export interface LandscapeRow extends Row {
  x1: number;
  x2: number;
  loss: number;
}

export interface FieldRow extends LandscapeRow {
  g_x1: number;
  g_x2: number;
  grad_norm: number;
  dir_x1: number;
  dir_x2: number;
  ratio: number;
  region: string;
}

export interface TrajectoryRow extends Row {
  t: number;
  x1: number;
  x2: number;
  loss: number;
}

export interface TraceRow extends Row {
  step: number;
  loss: number;
  pi_w: number;
  pi_l: number;
  margin: number;
}

export function loadTable(path: string, expected: readonly string[]): Row[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new Error(`${path}: CSV parse error: ${parsed.errors[0].message}`);
  }
  const lines = parsed.data;
  if (lines.length === 0) {
    throw new Error(`${path}: empty input`);
  }
  const header = lines[0];
  for (const column of expected) {
    if (!header.includes(column)) {
      throw new Error(`${path}: missing column "${column}" (expected ${expected.join(",")})`);
    }
  }
  if (header.length !== expected.length || header.some((c, i) => c !== expected[i])) {
    throw new Error(`${path}: header "${header.join(",")}" does not match "${expected.join(",")}"`);
  }
  if (lines.length === 1) {
    throw new Error(`${path}: no data rows`);
  }
  return lines.slice(1).map((cells, index) => {
    if (cells.length !== header.length) {
      throw new Error(`${path}: row ${index + 2} has ${cells.length} cells, expected ${header.length}`);
    }
    const row: Row = {};
    header.forEach((column, i) => {
      if (TEXT_COLUMNS.has(column)) {
        row[column] = cells[i];
        return;
      }
      const value = Number(cells[i]);
      if (!Number.isFinite(value)) {
        throw new Error(`${path}: row ${index + 2}, column "${column}": not a finite number (${cells[i]})`);
      }
      row[column] = value;
    });
    return row;
  });
}

export const loadLandscape = (path: string) => loadTable(path, LANDSCAPE_HEADER) as LandscapeRow[];
export const loadField = (path: string) => loadTable(path, FIELD_HEADER) as FieldRow[];
export const loadTrajectory = (path: string) => loadTable(path, TRAJECTORY_HEADER) as TrajectoryRow[];
export const loadTrace = (path: string) => loadTable(path, TRACE_HEADER) as TraceRow[];
