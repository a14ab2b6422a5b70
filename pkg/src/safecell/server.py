"""Interactive service: steps one engine in real time (scaled) and streams
state frames over a websocket while accepting live hand-steering commands.

Protocol (JSON text frames, schema version in every frame):
  server->client "config": workspace bounds, avoidance distances, waypoints.
  server->client "state": sent at the stream rate.
  client->server "hand_move" {x,y,z}, "pause", "resume", "reset",
                 "set_param" {name,value} (whitelist: retreat_speed, v_max,
                 theta_obs).
  server->client "error" {code, message}; the connection stays open.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import math
from dataclasses import replace

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import Engine
from .hand import HandKind, HandModelSpec, Keyframe
from .scenario import ScenarioConfig

SCHEMA_VERSION = 1
MAX_TRACE_ROWS = 100_000


def _interactive_config(config: ScenarioConfig) -> ScenarioConfig:
    """Force the scenario's hand into interactive mode (console steers it)."""
    if config.hand is None:
        if config.camera is None:
            raise ValueError("serve needs a camera in the scenario to track the hand")
        hand = HandModelSpec(kind=HandKind.INTERACTIVE,
                             keyframes=(Keyframe(0.0, (1.0, -0.45, 0.25)),))
    else:
        hand = replace(config.hand, kind=HandKind.INTERACTIVE)
    return replace(config, hand=hand)


def _clean(value: float) -> float | None:
    return value if math.isfinite(value) else None


class SimService:
    """Owns the engine, the pacing task and the client registry."""

    def __init__(self, config: ScenarioConfig, stream_hz: float = 30.0,
                 time_scale: float = 1.0):
        self.config = _interactive_config(config)
        self.engine = Engine(self.config)
        self.stream_hz = stream_hz
        self.time_scale = time_scale
        self.paused = False
        self._task: asyncio.Task | None = None

    # -- engine loop ---------------------------------------------------------

    async def run_loop(self) -> None:
        dt = self.config.control_dt / self.time_scale
        while True:
            if not self.paused:
                self.engine.step()
                if len(self.engine.trace.rows) > MAX_TRACE_ROWS:
                    del self.engine.trace.rows[: MAX_TRACE_ROWS // 2]
            await asyncio.sleep(dt)

    def start(self) -> None:
        self._task = asyncio.get_running_loop().create_task(self.run_loop())

    async def stop(self) -> None:
        if self._task is not None:
            self._task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._task
            self._task = None

    # -- frames ---------------------------------------------------------------

    def config_frame(self) -> dict:
        cfg = self.config
        return {
            "type": "config",
            "v": SCHEMA_VERSION,
            "workspace_bounds": [list(b) for b in cfg.workspace_bounds],
            "d_act": cfg.controller.d_act,
            "d_at": cfg.controller.d_at,
            "waypoints": [list(w.position) for w in cfg.waypoints],
            "stream_hz": self.stream_hz,
        }

    def state_frame(self) -> dict:
        e = self.engine
        d = e.decision
        s = e.safety
        hand_true = [_clean(float(x)) for x in e._hand_true]
        hand_est = [_clean(float(x)) for x in e._hand_est_row]
        return {
            "type": "state",
            "v": SCHEMA_VERSION,
            "t": e.t,
            "x_r": [float(x) for x in e.robot.x_r],
            "q": [float(x) for x in e.joints.q],
            "hand_true": hand_true,
            "hand_est": hand_est,
            "d_ro": _clean(float(d.d_ro)) if d is not None else None,
            "mode": int(s.mode) if s is not None else 1,
            "vib_left": bool(s.vib_left) if s is not None else False,
            "vib_right": bool(s.vib_right) if s is not None else False,
            "fdcm": bool(e.fdcm_active),
            "case": d.case.value if d is not None else "no_avoidance",
            "marker_visible": bool(e._marker_visible),
            "marker_angle_y": _clean(e._marker_angles[0]),
            "marker_angle_x": _clean(e._marker_angles[1]),
            "goal_index": e.goal_index,
            "paused": self.paused,
        }

    # -- commands -------------------------------------------------------------

    def handle(self, message: dict) -> dict | None:
        """Apply one client command; returns an error frame or None."""
        kind = message.get("type")
        if kind == "hand_move":
            try:
                target = [float(message[k]) for k in ("x", "y", "z")]
            except (KeyError, TypeError, ValueError):
                return _error("bad_hand_move", "hand_move needs numeric x, y, z")
            bounds = self.config.workspace_bounds
            clamped = [min(max(v, lo), hi) for v, (lo, hi) in zip(target, bounds)]
            self.engine.push_hand_target(clamped)
            return None
        if kind == "pause":
            self.paused = True
            return None
        if kind == "resume":
            self.paused = False
            return None
        if kind == "reset":
            self.engine.reset()
            return None
        if kind == "set_param":
            name = message.get("name")
            try:
                self.engine.set_param(str(name), float(message.get("value")))
            except (TypeError, ValueError) as exc:
                return _error("bad_param", str(exc))
            return None
        return _error("unknown_type", f"unknown message type {kind!r}")


def _error(code: str, message: str) -> dict:
    return {"type": "error", "v": SCHEMA_VERSION, "code": code, "message": message}


def create_app(config: ScenarioConfig, stream_hz: float = 30.0,
               time_scale: float = 1.0) -> FastAPI:
    service = SimService(config, stream_hz=stream_hz, time_scale=time_scale)

    @contextlib.asynccontextmanager
    async def lifespan(_: FastAPI):
        service.start()
        yield
        await service.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.service = service

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "t": service.engine.t}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        await ws.send_text(json.dumps(service.config_frame()))

        async def sender():
            period = 1.0 / service.stream_hz
            while True:
                await ws.send_text(json.dumps(service.state_frame()))
                await asyncio.sleep(period)

        async def receiver():
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                    if not isinstance(message, dict):
                        raise ValueError("frame must be an object")
                except ValueError:
                    await ws.send_text(json.dumps(_error("bad_json", "frame is not valid JSON")))
                    continue
                reply = service.handle(message)
                if reply is not None:
                    await ws.send_text(json.dumps(reply))

        send_task = asyncio.create_task(sender())
        try:
            await receiver()
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task

    return app
