"""Trace and metrics serialization.

CSV: fixed column order, header row, SI units, 9 significant digits.
Records file: JSON lines, a schema-versioned header record followed by one
record per row. Both are byte-stable for identical runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict
from pathlib import Path

from .engine import SimTrace, TraceRow, TRACE_SCHEMA_VERSION
from .metrics import Metrics

CSV_COLUMNS = (
    ["t"]
    + [f"q{i + 1}" for i in range(6)]
    + ["x_r_x", "x_r_y", "x_r_z", "v_cmd_x", "v_cmd_y", "v_cmd_z"]
    + ["case", "d_ro", "theta_c", "mode", "vib_left", "vib_right", "fdcm"]
    + ["marker_visible", "marker_angle_y", "marker_angle_x"]
    + ["hand_true_x", "hand_true_y", "hand_true_z"]
    + ["hand_est_x", "hand_est_y", "hand_est_z", "goal_index"]
)


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _csv_cells(row: TraceRow) -> list[str]:
    return (
        [_fmt(row.t)]
        + [_fmt(v) for v in row.q]
        + [_fmt(v) for v in row.x_r]
        + [_fmt(v) for v in row.v_cmd]
        + [
            row.case,
            _fmt(row.d_ro),
            _fmt(row.theta_c),
            str(row.mode),
            str(int(row.vib_left)),
            str(int(row.vib_right)),
            str(int(row.fdcm)),
            str(int(row.marker_visible)),
            _fmt(row.marker_angle_y),
            _fmt(row.marker_angle_x),
        ]
        + [_fmt(v) for v in row.hand_true]
        + [_fmt(v) for v in row.hand_est]
        + [str(row.goal_index)]
    )


def write_csv(trace: SimTrace, path) -> None:
    lines = [",".join(CSV_COLUMNS)]
    lines += [",".join(_csv_cells(r)) for r in trace.rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, tuple):
        return [_json_safe(v) for v in value]
    return value


def write_records(trace: SimTrace, path) -> None:
    header = {
        "record": "header",
        "schema_version": TRACE_SCHEMA_VERSION,
        "name": trace.name,
        "seed": trace.seed,
        "control_dt": trace.control_dt,
        "log_dt": trace.log_dt,
        "duration": trace.duration,
        "completion_time": trace.completion_time,
        "waypoints": [
            {"position": list(w.position), "dwell": w.dwell} for w in trace.waypoints
        ],
    }
    lines = [json.dumps(header, sort_keys=True)]
    for row in trace.rows:
        rec = {k: _json_safe(v) for k, v in asdict(row).items()}
        rec["record"] = "row"
        lines.append(json.dumps(rec, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def metrics_to_dict(metrics: Metrics, trace: SimTrace) -> dict:
    return {
        "schema_version": TRACE_SCHEMA_VERSION,
        "scenario": trace.name,
        "seed": trace.seed,
        "waypoints": [
            {"position": list(w.position), "dwell": w.dwell} for w in trace.waypoints
        ],
        "min_d_ro": _json_safe(metrics.min_d_ro),
        "mean_d_ro": _json_safe(metrics.mean_d_ro),
        "histogram": list(metrics.histogram),
        "tcp_path_length": metrics.tcp_path_length,
        "collision_path": metrics.collision_path,
        "task_time": metrics.task_time,
        "occlusion_time": metrics.occlusion_time,
        "fdcm_count": metrics.fdcm_count,
    }


def write_metrics(metrics: Metrics, trace: SimTrace, path) -> None:
    Path(path).write_text(json.dumps(metrics_to_dict(metrics, trace), indent=2, sort_keys=True) + "\n")


def read_metrics(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != TRACE_SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported metrics schema {doc.get('schema_version')}")
    return doc
