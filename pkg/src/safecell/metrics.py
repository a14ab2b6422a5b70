"""Run metrics: proximity statistics, path lengths, task time and the
distance histogram used for trial comparisons.

The distance histogram covers [0, 0.6] m in 1 cm bins, matching the range
the trials are analyzed over; mean_d_ro is taken over the same support so
it is always consistent with the histogram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import SimTrace

HIST_BIN_WIDTH = 0.01
HIST_RANGE = (0.0, 0.6)
HIST_BINS = int(round((HIST_RANGE[1] - HIST_RANGE[0]) / HIST_BIN_WIDTH))


@dataclass(frozen=True)
class Metrics:
    min_d_ro: float
    mean_d_ro: float
    histogram: tuple[int, ...]  # counts per 1 cm bin over [0, 0.6] m
    tcp_path_length: float
    collision_path: float | None
    task_time: float
    occlusion_time: float
    fdcm_count: int


@dataclass(frozen=True)
class TrackingErrorReport:
    mean_abs_axis_errors: tuple[float, float, float]  # camera axes, m
    mean_radial_error: float                          # m
    samples: int


def _finite_d_ro(trace: SimTrace) -> np.ndarray:
    d = np.array([r.d_ro for r in trace.rows])
    return d[np.isfinite(d) & (d < 1e6)]


def path_length(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def distance_histogram(d_ro: np.ndarray) -> tuple[int, ...]:
    counts, _ = np.histogram(d_ro, bins=HIST_BINS, range=HIST_RANGE)
    return tuple(int(c) for c in counts)


def compute_metrics(trace: SimTrace, baseline: SimTrace | None = None) -> Metrics:
    """Metrics over one trace; collision path only when a baseline run of the
    same waypoint program is supplied."""
    if baseline is not None and baseline.waypoints != trace.waypoints:
        raise ValueError("baseline waypoint program differs from the trace's")

    d = _finite_d_ro(trace)
    in_range = d[(d >= HIST_RANGE[0]) & (d <= HIST_RANGE[1])]
    min_d = float(d.min()) if d.size else math.nan
    mean_d = float(in_range.mean()) if in_range.size else math.nan

    length = path_length(trace.tcp_positions())
    collision = None
    if baseline is not None:
        collision = length - path_length(baseline.tcp_positions())

    visible = np.array([r.marker_visible for r in trace.rows], dtype=bool)
    has_hand = np.array(
        [not math.isnan(r.hand_true[0]) for r in trace.rows], dtype=bool
    )
    occlusion = float(np.sum(has_hand & ~visible) * trace.log_dt)

    fdcm = np.array([r.fdcm for r in trace.rows], dtype=bool)
    rising = int(np.sum(fdcm[1:] & ~fdcm[:-1]) + (1 if fdcm.size and fdcm[0] else 0))

    return Metrics(
        min_d_ro=min_d,
        mean_d_ro=mean_d,
        histogram=distance_histogram(in_range),
        tcp_path_length=length,
        collision_path=collision,
        task_time=trace.task_time,
        occlusion_time=occlusion,
        fdcm_count=rising,
    )


def tracking_error_report(trace: SimTrace, camera_rotation: np.ndarray) -> TrackingErrorReport:
    """Per-axis mean absolute tracking error (camera axes) and mean radial
    error over the rows where the marker was visible."""
    errors = []
    for r in trace.rows:
        if not r.marker_visible:
            continue
        est = np.asarray(r.hand_est)
        true = np.asarray(r.hand_true)
        if np.any(np.isnan(est)) or np.any(np.isnan(true)):
            continue
        errors.append(est - true)
    if not errors:
        raise ValueError("trace has no visible tracking rows")
    err_base = np.array(errors)
    err_cam = err_base @ camera_rotation  # base->camera: R^T applied to rows
    mean_abs = np.abs(err_cam).mean(axis=0)
    radial = float(np.linalg.norm(err_base, axis=1).mean())
    return TrackingErrorReport(
        mean_abs_axis_errors=(float(mean_abs[0]), float(mean_abs[1]), float(mean_abs[2])),
        mean_radial_error=radial,
        samples=len(errors),
    )


def histogram_mean(histogram, bin_width: float = HIST_BIN_WIDTH, lo: float = 0.0) -> float:
    """Mean distance reconstructed from bin midpoints; NaN for an empty histogram."""
    counts = np.asarray(histogram, dtype=float)
    total = counts.sum()
    if total == 0:
        return math.nan
    mids = lo + (np.arange(len(counts)) + 0.5) * bin_width
    return float((counts * mids).sum() / total)
