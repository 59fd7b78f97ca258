"""Tabular CSV/JSON export with fixed schemas and round-trip float precision.

Every emitted table has an exact header contract (consumed by the plotting
frontend and by downstream tooling):

* landscape:  ``x1,x2,loss``
* field:      ``x1,x2,loss,g_x1,g_x2,grad_norm,dir_x1,dir_x2,ratio,region``
* trajectory: ``t,x1,x2,loss,g_x1,g_x2,grad_norm,ratio``
* sweep:      ``x1_0,x2_0,region,steps_to_stop,termination,final_x1,final_x2,slow_time``
* trace:      ``step,loss,pi_w,pi_l,x1,x2,margin,rest_mass,grad_norm,d_pi_w,d_pi_l``

CSV floats are written with 17 significant digits (%.17g), which
round-trips float64 exactly; JSON exports are arrays of objects with the
same field names and rely on the serializer's shortest round-trip repr.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

from .field import FieldSample
from .flow import SweepReport, Trajectory
from .loss import RatioPoint
from .policy import TrainingTrace

__all__ = [
    "LANDSCAPE_HEADER",
    "FIELD_HEADER",
    "TRAJECTORY_HEADER",
    "SWEEP_HEADER",
    "TRACE_HEADER",
    "landscape_rows",
    "field_rows",
    "trajectory_rows",
    "sweep_rows",
    "trace_rows",
    "export_table",
    "format_float",
]

LANDSCAPE_HEADER = ("x1", "x2", "loss")
FIELD_HEADER = ("x1", "x2", "loss", "g_x1", "g_x2", "grad_norm", "dir_x1", "dir_x2", "ratio", "region")
TRAJECTORY_HEADER = ("t", "x1", "x2", "loss", "g_x1", "g_x2", "grad_norm", "ratio")
SWEEP_HEADER = ("x1_0", "x2_0", "region", "steps_to_stop", "termination", "final_x1", "final_x2", "slow_time")
TRACE_HEADER = ("step", "loss", "pi_w", "pi_l", "x1", "x2", "margin", "rest_mass", "grad_norm", "d_pi_w", "d_pi_l")


def format_float(value: float) -> str:
    return format(value, ".17g")


def landscape_rows(samples: Iterable[tuple[RatioPoint, float]]) -> list[dict]:
    return [{"x1": p.x1, "x2": p.x2, "loss": loss} for p, loss in samples]


def field_rows(samples: Iterable[FieldSample]) -> list[dict]:
    return [
        {
            "x1": s.point.x1,
            "x2": s.point.x2,
            "loss": s.loss,
            "g_x1": s.grad.d_x1,
            "g_x2": s.grad.d_x2,
            "grad_norm": s.grad_norm,
            "dir_x1": s.unit_dir[0],
            "dir_x2": s.unit_dir[1],
            "ratio": s.ratio,
            "region": s.region.kind.value,
        }
        for s in samples
    ]


def trajectory_rows(traj: Trajectory) -> list[dict]:
    return [
        {
            "t": s.t,
            "x1": s.point.x1,
            "x2": s.point.x2,
            "loss": s.loss,
            "g_x1": s.grad.d_x1,
            "g_x2": s.grad.d_x2,
            "grad_norm": s.grad_norm,
            "ratio": s.ratio,
        }
        for s in traj.steps
    ]


def sweep_rows(report: SweepReport) -> list[dict]:
    return [
        {
            "x1_0": c.init.x1,
            "x2_0": c.init.x2,
            "region": c.region.kind.value,
            "steps_to_stop": c.steps_to_stop,
            "termination": c.termination.value,
            "final_x1": c.final.x1,
            "final_x2": c.final.x2,
            "slow_time": c.slow_time,
        }
        for c in report.cells
    ]


def trace_rows(trace: TrainingTrace) -> list[dict]:
    return [
        {
            "step": r.step,
            "loss": r.loss,
            "pi_w": r.pi_w,
            "pi_l": r.pi_l,
            "x1": r.x1,
            "x2": r.x2,
            "margin": r.margin,
            "rest_mass": r.rest_mass,
            "grad_norm": r.grad_norm,
            "d_pi_w": r.d_pi_w,
            "d_pi_l": r.d_pi_l,
        }
        for r in trace.records
    ]


def export_table(
    rows: list[dict], header: tuple[str, ...], fmt: str, destination: str | Path
) -> None:
    """Write rows as CSV or JSON to ``destination``.

    Refuses empty inputs (an empty file would silently satisfy nothing) and
    keys missing from the declared header.  CSV cells keep the header's
    column order; JSON objects keep the same key order.
    """
    if not rows:
        raise ValueError("refusing to export an empty table")
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    for row in rows:
        if set(row) != set(header):
            raise ValueError(f"row keys {sorted(row)} do not match header {header}")
    path = Path(destination)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(row[key]) for key in header])
    else:
        ordered = [{key: row[key] for key in header} for row in rows]
        with path.open("w") as fh:
            json.dump(ordered, fh, indent=2)
            fh.write("\n")


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    return str(value)
