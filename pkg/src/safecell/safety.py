"""Four-mode haptic safety state machine.

Mode 1: clear of the avoidance ring, no vibration.
Mode 2: inside the avoidance ring, one motor cues the user.
Mode 3: inside the critical ring, both motors on, free-drive requested.
Mode 4: marker lost, both motors on, free-drive requested; dominates distance.

A dwell-based debounce keeps the vibration pattern from flickering at ring
boundaries; escalations into Mode 3/4 bypass it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .apf import ControllerParams


class Mode(enum.IntEnum):
    MODE1 = 1
    MODE2 = 2
    MODE3 = 3
    MODE4 = 4


@dataclass(frozen=True)
class SafetySnapshot:
    mode: Mode
    vib_left: bool
    vib_right: bool
    fdcm_requested: bool
    d_ro: float
    visible: bool
    timestamp: float = 0.0

    @property
    def vibrating(self) -> bool:
        return self.vib_left or self.vib_right


def _snapshot(mode: Mode, d_ro: float, visible: bool, timestamp: float,
              facing_side: int) -> SafetySnapshot:
    if mode is Mode.MODE1:
        left = right = False
    elif mode is Mode.MODE2:
        right = facing_side >= 0
        left = not right
    else:
        left = right = True
    return SafetySnapshot(
        mode=mode,
        vib_left=left,
        vib_right=right,
        fdcm_requested=mode in (Mode.MODE3, Mode.MODE4),
        d_ro=d_ro,
        visible=visible,
        timestamp=timestamp,
    )


def select_mode(d_ro: float, visible: bool, params: ControllerParams,
                timestamp: float = 0.0, facing_side: int = 1) -> SafetySnapshot:
    """Memoryless mode classification from distance and marker visibility.

    facing_side picks the Mode 2 motor: >= 0 lights the right one. Mode 4
    (marker lost) takes priority over any distance.
    """
    if not visible:
        mode = Mode.MODE4
    elif d_ro < 0:
        raise ValueError("d_ro must be >= 0 when the marker is visible")
    elif d_ro > params.d_at:
        mode = Mode.MODE1
    elif d_ro >= params.d_act:
        mode = Mode.MODE2
    else:
        mode = Mode.MODE3
    return _snapshot(mode, d_ro, visible, timestamp, facing_side)


def boundary_debounce(history: Sequence[SafetySnapshot], candidate: SafetySnapshot,
                      dwell: float, facing_side: int = 1) -> SafetySnapshot:
    """Debounced snapshot to commit given the raw candidates seen so far.

    `history` holds the previous raw (undebounced) snapshots in time order;
    a mode change commits once continuously indicated for >= dwell seconds,
    except entries into Mode 3/4 which commit immediately.
    """
    if dwell < 0:
        raise ValueError("dwell must be >= 0")
    committed = history[0].mode if history else candidate.mode
    pending_mode = None
    pending_since = 0.0
    for raw in list(history[1:]) + [candidate]:
        if raw.mode == committed:
            pending_mode = None
            continue
        if raw.mode in (Mode.MODE3, Mode.MODE4):
            committed = raw.mode
            pending_mode = None
            continue
        if pending_mode != raw.mode:
            pending_mode = raw.mode
            pending_since = raw.timestamp
        if raw.timestamp - pending_since >= dwell:
            committed = raw.mode
            pending_mode = None
    if committed == candidate.mode:
        return candidate
    return _snapshot(committed, candidate.d_ro, candidate.visible,
                     candidate.timestamp, facing_side)


class SafetyMonitor:
    """Per-simulation wrapper: raw classification, coupling to the robot's
    free-drive state, and incremental boundary debounce."""

    def __init__(self, params: ControllerParams, dwell: float = 0.1):
        self.params = params
        self.dwell = dwell
        self._committed: Mode | None = None
        self._pending: Mode | None = None
        self._pending_since = 0.0

    def update(self, d_ro: float, visible: bool, timestamp: float,
               fdcm_active: bool, facing_side: int = 1) -> SafetySnapshot:
        raw = select_mode(d_ro, visible, self.params, timestamp, facing_side)
        # While the robot holds in free-drive the haptics must not de-escalate,
        # mirroring the d_ACT/d_DCT hysteresis of the controller.
        if fdcm_active and raw.mode in (Mode.MODE1, Mode.MODE2):
            raw = _snapshot(Mode.MODE3, d_ro, visible, timestamp, facing_side)
        if self._committed is None or raw.mode == self._committed:
            self._committed = raw.mode
            self._pending = None
        elif raw.mode in (Mode.MODE3, Mode.MODE4):
            self._committed = raw.mode
            self._pending = None
        else:
            if self._pending != raw.mode:
                self._pending = raw.mode
                self._pending_since = timestamp
            if timestamp - self._pending_since >= self.dwell:
                self._committed = raw.mode
                self._pending = None
        if raw.mode == self._committed:
            return raw
        return _snapshot(self._committed, d_ro, visible, timestamp, facing_side)

    def reset(self) -> None:
        self._committed = None
        self._pending = None
        self._pending_since = 0.0
