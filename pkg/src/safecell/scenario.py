"""Scenario configuration: schema, defaults, YAML loading and validation.

A scenario file wires an arm description, controller parameters, camera and
noise models, gimbal setup, a hand behavior and a goal waypoint program into
one reproducible run. Validation failures raise ScenarioError with the file
and key that caused them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .apf import ControllerParams
from .gimbal import GimbalState
from .hand import HandKind, HandModelSpec, Keyframe, OrientationKeyframe
from .kinematics import ArmModel, builtin_arm, load_arm
from .perception import CameraModel, NoiseModel, SphereOccluder, CapsuleOccluder
from .transforms import Transform


class ScenarioError(ValueError):
    """Configuration is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class Waypoint:
    position: tuple[float, float, float]
    dwell: float = 0.0


@dataclass(frozen=True)
class GimbalConfig:
    enabled: bool = True
    targets: tuple[float, float] = (math.radians(40.0), math.radians(20.0))
    band: float = math.radians(10.0)  # total band; the dead zone is +-band/2
    max_rate: float = 3.5
    limits: tuple[tuple[float, float], tuple[float, float]] = (
        (-math.pi / 2, math.pi / 2),
        (-math.pi / 2, math.pi / 2),
    )
    axis_signs: tuple[float, float] = (1.0, 1.0)
    initial_angles: tuple[float, float] = (0.0, 0.0)
    mount_offset: tuple[float, float, float] = (0.0, 0.0, 0.04)

    def initial_state(self) -> GimbalState:
        return GimbalState(
            motor_angles=np.array(self.initial_angles),
            limits=np.array(self.limits),
            max_rate=self.max_rate,
        )

    def mount(self) -> Transform:
        return Transform.from_translation(self.mount_offset)


@dataclass(frozen=True)
class SafetyConfig:
    dwell: float = 0.1
    mode2_motor: str = "facing"  # "facing" | "left" | "right"

    def __post_init__(self):
        if self.mode2_motor not in ("facing", "left", "right"):
            raise ScenarioError(f"mode2_motor must be facing/left/right, got {self.mode2_motor!r}")


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str = "scenario"
    seed: int = 0
    duration: float = 30.0
    control_dt: float = 0.01
    log_dt: float = 0.1
    arm: ArmModel = field(default_factory=builtin_arm)
    initial_q: np.ndarray = field(
        default_factory=lambda: np.radians([180.0, -60.0, 100.0, -130.0, -90.0, 0.0])
    )
    controller: ControllerParams = field(default_factory=ControllerParams)
    damping: float = 1e-3
    position_only_ik: bool = False
    camera: CameraModel | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    gimbal: GimbalConfig = field(default_factory=GimbalConfig)
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    hand: HandModelSpec | None = None
    forearm_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    waypoints: tuple[Waypoint, ...] = ()
    waypoint_tolerance: float = 0.005
    occluders: tuple = ()
    workspace_bounds: tuple[tuple[float, float], ...] = (
        (-0.2, 1.2),
        (-0.8, 0.8),
        (0.0, 1.0),
    )

    def __post_init__(self):
        if self.duration <= 0:
            raise ScenarioError("duration must be > 0")
        if self.control_dt <= 0 or self.log_dt <= 0:
            raise ScenarioError("control_dt and log_dt must be > 0")
        if self.control_dt > self.log_dt + 1e-12:
            raise ScenarioError("control_dt must be <= log_dt")
        if not self.waypoints:
            raise ScenarioError("at least one goal waypoint is required")
        for w in self.waypoints:
            if not all(math.isfinite(c) for c in w.position):
                raise ScenarioError("waypoint positions must be finite")
        if self.hand is not None and self.camera is None:
            raise ScenarioError("a hand model requires a camera for tracking")
        object.__setattr__(self, "initial_q", np.asarray(self.initial_q, dtype=float).reshape(6))


def _get(doc: dict, key: str, default=None, required: bool = False, source: str = "?"):
    if key in doc:
        return doc[key]
    if required:
        raise ScenarioError(f"{source}: missing required key '{key}'")
    return default


def _radians(doc: dict, deg_key: str, rad_key: str, default_rad: float) -> float:
    if deg_key in doc:
        return math.radians(float(doc[deg_key]))
    if rad_key in doc:
        return float(doc[rad_key])
    return default_rad


def _controller_from(doc: dict) -> ControllerParams:
    base = ControllerParams()
    return ControllerParams(
        k_pc1=float(doc.get("k_pc1", base.k_pc1)),
        k_pc2=float(doc.get("k_pc2", base.k_pc2)),
        tau=float(doc.get("tau", base.tau)),
        theta_obs=_radians(doc, "theta_obs_deg", "theta_obs", base.theta_obs),
        d_at=float(doc.get("d_at", base.d_at)),
        d_act=float(doc.get("d_act", base.d_act)),
        d_dct=float(doc.get("d_dct", base.d_dct)),
        v_max=float(doc.get("v_max", base.v_max)),
        rep_gain=float(doc.get("rep_gain", base.rep_gain)),
    )


def _camera_from(doc: dict) -> CameraModel:
    return CameraModel.look_at(
        position=doc.get("position", [0.85, 0.4, 1.75]),
        target=doc.get("target", [0.85, -0.1, 0.2]),
        horizontal_fov=_radians(doc, "horizontal_fov_deg", "horizontal_fov", math.radians(70.0)),
        vertical_fov=_radians(doc, "vertical_fov_deg", "vertical_fov", math.radians(50.0)),
        max_range=float(doc.get("max_range", 3.0)),
        max_incidence=_radians(doc, "max_incidence_deg", "max_incidence", math.radians(60.0)),
    )


def _noise_from(doc: dict, seed: int) -> NoiseModel:
    seed = int(doc.get("seed", seed))
    depth = dict(
        depth_scale=float(doc.get("depth_scale", 0.0)),
        reference_depth=float(doc.get("reference_depth", 1.0)),
    )
    if "mean_abs_targets_cm" in doc:
        targets = np.asarray(doc["mean_abs_targets_cm"], dtype=float) / 100.0
        base = NoiseModel.from_mean_abs_targets(targets, seed=seed)
        return NoiseModel(sigma_axes=base.sigma_axes, seed=seed, **depth)
    return NoiseModel(
        sigma_axes=np.asarray(doc.get("sigma_axes", [0.0, 0.0, 0.0]), dtype=float),
        bias_axes=np.asarray(doc.get("bias_axes", [0.0, 0.0, 0.0]), dtype=float),
        seed=seed,
        **depth,
    )


def _gimbal_from(doc: dict) -> GimbalConfig:
    base = GimbalConfig()
    targets = base.targets
    if "targets_deg" in doc:
        targets = tuple(math.radians(float(x)) for x in doc["targets_deg"])
    limits = base.limits
    if "limits_deg" in doc:
        limits = tuple(
            (math.radians(float(lo)), math.radians(float(hi))) for lo, hi in doc["limits_deg"]
        )
    initial = base.initial_angles
    if "initial_angles_deg" in doc:
        initial = tuple(math.radians(float(x)) for x in doc["initial_angles_deg"])
    return GimbalConfig(
        enabled=bool(doc.get("enabled", True)),
        targets=targets,
        band=_radians(doc, "band_deg", "band", base.band),
        max_rate=float(doc.get("max_rate", base.max_rate)),
        limits=limits,
        axis_signs=tuple(float(s) for s in doc.get("axis_signs", base.axis_signs)),
        initial_angles=initial,
        mount_offset=tuple(float(x) for x in doc.get("mount_offset", base.mount_offset)),
    )


def _hand_from(doc: dict, source: str) -> HandModelSpec:
    kind = HandKind(_get(doc, "kind", required=True, source=f"{source}:hand"))
    keyframes = tuple(
        Keyframe(float(k["t"]), tuple(float(c) for c in k["position"]))
        for k in _get(doc, "keyframes", required=True, source=f"{source}:hand")
    )
    profile_doc = doc.get("forearm_profile")
    if profile_doc:
        profile = tuple(
            OrientationKeyframe(
                float(k["t"]),
                tuple(math.radians(float(a)) for a in k["rpy_deg"])
                if "rpy_deg" in k
                else tuple(float(a) for a in k["rpy"]),
            )
            for k in profile_doc
        )
    else:
        profile = (OrientationKeyframe(0.0, (0.0, 0.0, math.pi / 2)),)
    base = HandModelSpec()
    return HandModelSpec(
        kind=kind,
        keyframes=keyframes,
        forearm_profile=profile,
        loop=bool(doc.get("loop", False)),
        retreat_speed=float(doc.get("retreat_speed", base.retreat_speed)),
        reaction_delay=float(doc.get("reaction_delay", base.reaction_delay)),
        input_rate_cap=float(doc.get("input_rate_cap", base.input_rate_cap)),
    )


def _occluders_from(items) -> tuple:
    occs = []
    for item in items or ():
        kind = item.get("kind", "sphere")
        if kind == "sphere":
            occs.append(SphereOccluder(np.asarray(item["center"], dtype=float), float(item["radius"])))
        elif kind == "capsule":
            occs.append(
                CapsuleOccluder(
                    np.asarray(item["a"], dtype=float),
                    np.asarray(item["b"], dtype=float),
                    float(item["radius"]),
                )
            )
        else:
            raise ScenarioError(f"unknown occluder kind {kind!r}")
    return tuple(occs)


def scenario_from_dict(doc: dict, source: str = "<dict>", base_dir: Path | None = None) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ScenarioError(f"{source}: scenario document must be a mapping")
    arm_ref = doc.get("arm", "builtin:ur10")
    if isinstance(arm_ref, str) and arm_ref.startswith("builtin:"):
        arm = builtin_arm(arm_ref.split(":", 1)[1])
    else:
        arm_path = Path(arm_ref)
        if base_dir is not None and not arm_path.is_absolute():
            arm_path = base_dir / arm_path
        try:
            arm = load_arm(arm_path)
        except FileNotFoundError as exc:
            raise ScenarioError(f"{source}: arm file not found: {arm_path}") from exc

    seed = int(doc.get("seed", 0))
    camera = _camera_from(doc["camera"]) if "camera" in doc else None
    hand = _hand_from(doc["hand"], source) if doc.get("hand") else None

    waypoints_doc = _get(doc, "waypoints", required=True, source=source)
    waypoints = tuple(
        Waypoint(tuple(float(c) for c in w["position"]), float(w.get("dwell", 0.0)))
        for w in waypoints_doc
    )

    initial_q = doc.get("initial_q_deg")
    if initial_q is not None:
        initial_q = np.radians(np.asarray(initial_q, dtype=float))
    else:
        initial_q = np.asarray(
            doc.get("initial_q", np.radians([180.0, -60.0, 100.0, -130.0, -90.0, 0.0])),
            dtype=float,
        )

    safety_doc = doc.get("safety", {})
    try:
        return ScenarioConfig(
            name=str(doc.get("name", Path(source).stem if source != "<dict>" else "scenario")),
            seed=seed,
            duration=float(_get(doc, "duration", required=True, source=source)),
            control_dt=float(doc.get("control_dt", 0.01)),
            log_dt=float(doc.get("log_dt", 0.1)),
            arm=arm,
            initial_q=initial_q,
            controller=_controller_from(doc.get("controller", {})),
            damping=float(doc.get("damping", 1e-3)),
            position_only_ik=bool(doc.get("position_only_ik", False)),
            camera=camera,
            noise=_noise_from(doc.get("noise", {}), seed),
            gimbal=_gimbal_from(doc.get("gimbal", {})),
            safety=SafetyConfig(
                dwell=float(safety_doc.get("dwell", 0.1)),
                mode2_motor=str(safety_doc.get("mode2_motor", "facing")),
            ),
            hand=hand,
            forearm_offset=tuple(float(x) for x in doc.get("forearm_offset", (0.0, 0.0, 0.0))),
            waypoints=waypoints,
            waypoint_tolerance=float(doc.get("waypoint_tolerance", 0.005)),
            occluders=_occluders_from(doc.get("occluders")),
            workspace_bounds=tuple(
                tuple(float(b) for b in pair)
                for pair in doc.get(
                    "workspace_bounds", ((-0.2, 1.2), (-0.8, 0.8), (0.0, 1.0))
                )
            ),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"{source}: {exc}") from exc


def load_scenario(path) -> ScenarioConfig:
    """Load and validate a scenario YAML file."""
    p = Path(path)
    if not p.exists():
        raise ScenarioError(f"scenario file not found: {p}")
    with open(p) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"{p}: invalid YAML: {exc}") from exc
    return scenario_from_dict(doc, source=str(p), base_dir=p.parent)
