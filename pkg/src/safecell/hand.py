"""Hand/forearm behavior models driven by the scenario.

Scripted hands follow position keyframes (optionally looping) with a
piecewise-linear forearm orientation profile. The haptic-reactive variant
retreats from the TCP after sustained vibration and drifts back to its
script when the alarm clears. The interactive variant follows externally
queued targets under a rate cap (the operator console feeds it).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .safety import SafetySnapshot
from .transforms import Transform, rotation_from_rpy, unit


class HandKind(enum.Enum):
    SCRIPTED = "scripted"
    HAPTIC_REACTIVE = "haptic_reactive"
    INTERACTIVE = "interactive"


@dataclass(frozen=True)
class Keyframe:
    time: float
    position: tuple[float, float, float]


@dataclass(frozen=True)
class OrientationKeyframe:
    time: float
    rpy: tuple[float, float, float]


@dataclass(frozen=True)
class HandModelSpec:
    kind: HandKind = HandKind.SCRIPTED
    keyframes: tuple[Keyframe, ...] = (Keyframe(0.0, (0.6, -0.5, 0.25)),)
    forearm_profile: tuple[OrientationKeyframe, ...] = (
        OrientationKeyframe(0.0, (0.0, 0.0, math.pi / 2)),
    )
    loop: bool = False
    retreat_speed: float = 0.25    # m/s, haptic-reactive
    reaction_delay: float = 0.3    # s of sustained vibration before retreating
    input_rate_cap: float = 1.5    # m/s, interactive target following

    def __post_init__(self):
        if self.retreat_speed < 0:
            raise ValueError("retreat_speed must be >= 0")
        if self.reaction_delay < 0:
            raise ValueError("reaction_delay must be >= 0")
        if not self.keyframes:
            raise ValueError("need at least one keyframe")


@dataclass(frozen=True, eq=False)
class HandSample:
    forearm_pose: Transform
    scripted_reference: np.ndarray  # keyframe position before any retreat offset


def _interp_positions(keyframes: tuple[Keyframe, ...], t: float, loop: bool) -> np.ndarray:
    times = [k.time for k in keyframes]
    if loop and times[-1] > 0:
        t = t % times[-1]
    if t <= times[0]:
        return np.array(keyframes[0].position, dtype=float)
    if t >= times[-1]:
        return np.array(keyframes[-1].position, dtype=float)
    idx = int(np.searchsorted(times, t, side="right")) - 1
    k0, k1 = keyframes[idx], keyframes[idx + 1]
    span = k1.time - k0.time
    a = 0.0 if span <= 0 else (t - k0.time) / span
    p0 = np.array(k0.position, dtype=float)
    p1 = np.array(k1.position, dtype=float)
    return p0 + a * (p1 - p0)


def _interp_rpy(profile: tuple[OrientationKeyframe, ...], t: float, loop: bool) -> np.ndarray:
    times = [k.time for k in profile]
    if loop and times[-1] > 0:
        t = t % times[-1]
    if t <= times[0]:
        return np.array(profile[0].rpy, dtype=float)
    if t >= times[-1]:
        return np.array(profile[-1].rpy, dtype=float)
    idx = int(np.searchsorted(times, t, side="right")) - 1
    k0, k1 = profile[idx], profile[idx + 1]
    span = k1.time - k0.time
    a = 0.0 if span <= 0 else (t - k0.time) / span
    r0 = np.array(k0.rpy, dtype=float)
    r1 = np.array(k1.rpy, dtype=float)
    return r0 + a * (r1 - r0)


class HandModel:
    """Stateful wrapper evaluating a HandModelSpec step by step."""

    def __init__(self, spec: HandModelSpec):
        self.spec = spec
        self._retreat_offset = np.zeros(3)
        self._vib_since: float | None = None
        self._interactive_pos: np.ndarray | None = None
        self._interactive_target: np.ndarray | None = None

    def reset(self) -> None:
        self._retreat_offset = np.zeros(3)
        self._vib_since = None
        self._interactive_pos = None
        self._interactive_target = None

    def set_target(self, position) -> None:
        """Interactive input: latest commanded hand position."""
        self._interactive_target = np.asarray(position, dtype=float).reshape(3)

    def update(self, t: float, dt: float, safety: SafetySnapshot | None,
               tcp_position: np.ndarray | None) -> HandSample:
        spec = self.spec
        rpy = _interp_rpy(spec.forearm_profile, t, spec.loop)
        rotation = rotation_from_rpy(*rpy)

        if spec.kind is HandKind.INTERACTIVE:
            if self._interactive_pos is None:
                self._interactive_pos = np.array(spec.keyframes[0].position, dtype=float)
            if self._interactive_target is not None:
                delta = self._interactive_target - self._interactive_pos
                dist = float(np.linalg.norm(delta))
                step = spec.input_rate_cap * dt
                if dist <= step:
                    self._interactive_pos = self._interactive_target.copy()
                else:
                    self._interactive_pos = self._interactive_pos + delta * (step / dist)
            pos = self._interactive_pos.copy()
            return HandSample(Transform(rotation, pos), pos.copy())

        ref = _interp_positions(spec.keyframes, t, spec.loop)
        if spec.kind is HandKind.HAPTIC_REACTIVE:
            vibrating = safety is not None and safety.vibrating
            if vibrating:
                if self._vib_since is None:
                    self._vib_since = t
                reacting = (t - self._vib_since) >= spec.reaction_delay
            else:
                self._vib_since = None
                reacting = False
            if reacting and tcp_position is not None:
                away = unit(ref + self._retreat_offset - tcp_position)
                if away is not None:
                    self._retreat_offset = self._retreat_offset + away * spec.retreat_speed * dt
            elif not vibrating:
                # alarm over: drift back onto the script
                back = float(np.linalg.norm(self._retreat_offset))
                if back > 0:
                    shrink = min(spec.retreat_speed * dt, back)
                    self._retreat_offset = self._retreat_offset * (1.0 - shrink / back)
            pos = ref + self._retreat_offset
            return HandSample(Transform(rotation, pos), ref)

        return HandSample(Transform(rotation, ref), ref)
