"""Command-line entry point: run scenarios, calibrate tracking noise, compare
trial outputs, and host the interactive console backend.

Exit codes: 0 success, 2 usage/configuration problems, 3 runtime failures.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import click
import numpy as np

from . import engine as engine_mod
from .calibrate import CalibrationError, calibrate_noise
from .engine import SimulationError
from .metrics import HIST_BIN_WIDTH, HIST_BINS, Metrics, compute_metrics
from .scenario import ScenarioError, load_scenario
from . import trace_io

TRIAL_LABELS = ("baseline", "static", "gimbal", "haptic")


@dataclass(frozen=True)
class TrialComparison:
    """Four-trial summary; every delta is derived from the stored metrics."""

    metrics: dict[str, dict]

    @property
    def task_time_improvement_gimbal_pct(self) -> float:
        static, gimbal = self.metrics["static"], self.metrics["gimbal"]
        return (static["task_time"] - gimbal["task_time"]) / static["task_time"] * 100.0

    @property
    def task_time_improvement_haptic_pct(self) -> float:
        gimbal, haptic = self.metrics["gimbal"], self.metrics["haptic"]
        return (gimbal["task_time"] - haptic["task_time"]) / gimbal["task_time"] * 100.0

    @property
    def collision_path_reduction_pct(self) -> float:
        static, haptic = self.metrics["static"], self.metrics["haptic"]
        if not static["collision_path"]:
            return 0.0
        return (
            (static["collision_path"] - haptic["collision_path"])
            / static["collision_path"] * 100.0
        )

    @property
    def mean_distance_increase_m(self) -> float:
        haptic = self.metrics["haptic"]["mean_d_ro"]
        gimbal = self.metrics["gimbal"]["mean_d_ro"]
        if haptic is None or gimbal is None:
            return float("nan")
        return haptic - gimbal

    def as_dict(self) -> dict:
        return {
            "trials": self.metrics,
            "deltas": {
                "task_time_improvement_gimbal_pct": self.task_time_improvement_gimbal_pct,
                "task_time_improvement_haptic_pct": self.task_time_improvement_haptic_pct,
                "collision_path_reduction_pct": self.collision_path_reduction_pct,
                "mean_distance_increase_m": self.mean_distance_increase_m,
            },
        }


@click.group()
def main():
    """Simulation and control toolkit for shared human-robot workspaces."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(), help="scenario YAML")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="output directory")
@click.option("--seed", type=int, default=None, help="override the scenario seed")
def cmd_run(config_path, out_dir, seed):
    """Run one scenario; write trace.csv / trace.jsonl / metrics.json."""
    try:
        config = load_scenario(config_path)
        if seed is not None:
            noise = replace(config.noise, seed=seed)
            config = replace(config, seed=seed, noise=noise)
    except ScenarioError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)

    try:
        trace = engine_mod.run(config)
    except SimulationError as exc:
        click.echo(f"simulation error: {exc}", err=True)
        sys.exit(3)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics = compute_metrics(trace)
    trace_io.write_csv(trace, out / "trace.csv")
    trace_io.write_records(trace, out / "trace.jsonl")
    trace_io.write_metrics(metrics, trace, out / "metrics.json")
    _echo_metrics(config.name, metrics)


def _echo_metrics(name: str, metrics: Metrics) -> None:
    click.echo(f"[{name}] task_time={metrics.task_time:.2f}s "
               f"path={metrics.tcp_path_length:.3f}m "
               f"min_d={metrics.min_d_ro:.4f} mean_d={metrics.mean_d_ro:.4f} "
               f"occlusion={metrics.occlusion_time:.2f}s fdcm={metrics.fdcm_count}")


@main.command("calibrate-noise")
@click.option("--targets-cm", default="0.8,0.7,1.1", show_default=True,
              help="per-axis mean absolute error targets, cm, comma separated")
@click.option("--samples", default=1_000_000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="optionally write the calibrated model as JSON")
def cmd_calibrate_noise(targets_cm, samples, seed, out_path):
    """Find noise sigmas whose Monte-Carlo mean |error| hits the targets."""
    try:
        targets = [float(x) / 100.0 for x in targets_cm.split(",")]
        if len(targets) != 3:
            raise ValueError("need exactly three targets")
    except ValueError as exc:
        raise click.UsageError(f"bad --targets-cm: {exc}")

    try:
        result = calibrate_noise(targets, samples=samples, seed=seed)
    except CalibrationError as exc:
        click.echo(f"calibration failed: {exc}", err=True)
        sys.exit(3)

    sig = result.noise.sigma_axes
    ach = np.array(result.achieved_mean_abs)
    click.echo(f"sigma_axes_m: {sig[0]:.6f}, {sig[1]:.6f}, {sig[2]:.6f}")
    click.echo(f"achieved mean |error| cm: {ach[0]*100:.4f}, {ach[1]*100:.4f}, {ach[2]*100:.4f}")
    click.echo(f"achieved mean radial error cm: {result.achieved_radial_mean*100:.4f}")
    if out_path:
        Path(out_path).write_text(json.dumps({
            "sigma_axes_m": [float(x) for x in sig],
            "achieved_mean_abs_m": [float(x) for x in ach],
            "achieved_radial_mean_m": result.achieved_radial_mean,
            "samples": result.samples,
            "seed": seed,
        }, indent=2) + "\n")


@main.command("compare")
@click.argument("trial_dirs", nargs=4, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_compare(trial_dirs, out_dir):
    """Compare four trial outputs: BASELINE STATIC GIMBAL HAPTIC directories
    (each produced by `run`). Writes comparison.json and histograms.csv."""
    docs = {}
    for label, trial_dir in zip(TRIAL_LABELS, trial_dirs):
        path = Path(trial_dir) / "metrics.json"
        if not path.exists():
            click.echo(f"missing metrics file: {path}", err=True)
            sys.exit(2)
        try:
            docs[label] = trace_io.read_metrics(path)
        except (ValueError, json.JSONDecodeError) as exc:
            click.echo(f"unreadable metrics {path}: {exc}", err=True)
            sys.exit(2)

    reference = docs["baseline"]["waypoints"]
    for label in TRIAL_LABELS[1:]:
        if docs[label]["waypoints"] != reference:
            click.echo(f"waypoint program of '{label}' differs from the baseline", err=True)
            sys.exit(2)

    # collision paths against the baseline's recorded path length
    base_len = docs["baseline"]["tcp_path_length"]
    for label in TRIAL_LABELS:
        docs[label]["collision_path"] = docs[label]["tcp_path_length"] - base_len

    comparison = TrialComparison(metrics=docs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.json").write_text(
        json.dumps(comparison.as_dict(), indent=2, sort_keys=True) + "\n"
    )

    lines = ["bin_lo_m,bin_hi_m," + ",".join(TRIAL_LABELS)]
    for i in range(HIST_BINS):
        lo, hi = i * HIST_BIN_WIDTH, (i + 1) * HIST_BIN_WIDTH
        counts = ",".join(str(docs[label]["histogram"][i]) for label in TRIAL_LABELS)
        lines.append(f"{lo:.2f},{hi:.2f},{counts}")
    (out / "histograms.csv").write_text("\n".join(lines) + "\n")

    click.echo(f"{'trial':<10}{'task_time':>10}{'min_d':>8}{'mean_d':>8}"
               f"{'occl':>7}{'coll_path':>10}")
    for label in TRIAL_LABELS:
        doc = docs[label]
        min_d = doc["min_d_ro"] if doc["min_d_ro"] is not None else float("nan")
        mean_d = doc["mean_d_ro"] if doc["mean_d_ro"] is not None else float("nan")
        click.echo(f"{label:<10}{doc['task_time']:>10.2f}{min_d:>8.3f}"
                   f"{mean_d:>8.3f}{doc['occlusion_time']:>7.2f}"
                   f"{doc['collision_path']:>10.3f}")
    click.echo(f"gimbal task-time improvement: {comparison.task_time_improvement_gimbal_pct:.1f}%")
    click.echo(f"haptic task-time improvement: {comparison.task_time_improvement_haptic_pct:.1f}%")
    click.echo(f"collision-path reduction:     {comparison.collision_path_reduction_pct:.1f}%")
    click.echo(f"mean-distance increase:       {comparison.mean_distance_increase_m*100:.1f} cm")


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--bind", default="127.0.0.1:8750", show_default=True, help="host:port")
@click.option("--stream-hz", default=30.0, show_default=True, type=float)
@click.option("--time-scale", default=1.0, show_default=True, type=float,
              help="simulation speed multiplier relative to wall clock")
def cmd_serve(config_path, bind, stream_hz, time_scale):
    """Host the interactive console backend (websocket on /ws)."""
    import uvicorn

    from .server import create_app

    try:
        config = load_scenario(config_path)
        app = create_app(config, stream_hz=stream_hz, time_scale=time_scale)
    except (ScenarioError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)

    try:
        host, port_text = bind.rsplit(":", 1)
        port = int(port_text)
    except ValueError:
        raise click.UsageError(f"bad --bind {bind!r}, expected host:port")

    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except SystemExit:
        raise
    except OSError as exc:
        click.echo(f"cannot bind {bind}: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
