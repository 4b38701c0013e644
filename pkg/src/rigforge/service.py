"""Interactive posing service: one authoritative session, many viewers.

JSON messages over a WebSocket.  Client to server::

    {"type": "set_control", "name": "...", "value": ...}
    {"type": "load_pose", "pose": {"controls": {...}}}
    {"type": "switch_mode", "limb": "armL", "mode": "fk"|"ik", "match": true}

Server to client::

    {"type": "rig_description", "controls": [...], "skeleton": {...},
     "limbs": [...], "revision": n}
    {"type": "pose_update", "revision": n, "joints": {name: [16 floats]},
     "controls": {...}}          # controls echoed when a command moved them
    {"type": "error", "code": "...", "message": "..."}

Mutations apply in arrival order; the revision counter increases by exactly
one per accepted mutation and every viewer sees the same sequence.
"""

from __future__ import annotations

import asyncio
from typing import Dict, List, Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .errors import RigError
from .fkik import switch_mode
from .graph import ControlPose
from .jsonio import pose_from_json
from .math3d import xf_to_mat4


class RigSession:
    """Authoritative rig state: current pose and a monotonic revision."""

    def __init__(self, rig):
        self.rig = rig
        self.session = rig.session()
        self.pose = ControlPose()
        self.revision = 0
        self.joint_worlds = self.session.evaluate(self.pose)

    # -- mutations (each bumps the revision exactly once) -------------------

    def set_control(self, name: str, value) -> None:
        if name not in self.rig.graph.control_map():
            raise RigError(f"no control named {name!r}")
        coerced = _coerce_wire_value(value)
        # incremental: only the control's downstream closure recomputes
        self.joint_worlds = self.session.apply_control_change(name, coerced)
        self.pose[name] = coerced
        self.revision += 1

    def load_pose(self, pose: ControlPose) -> None:
        self.joint_worlds = self.session.evaluate(pose)
        self.pose = ControlPose(pose)
        self.revision += 1

    def switch_limb(self, limb: str, mode: str, match: bool = True) -> None:
        if match:
            new_pose = switch_mode(self.rig, limb, mode, self.pose, self.session)
        else:
            meta = self.rig.limbs.get(limb)
            if meta is None:
                raise RigError(f"no limb {limb!r}")
            new_pose = ControlPose(self.pose)
            new_pose[meta["blend_attr"]] = 1.0 if mode == "ik" else 0.0
        self.load_pose(new_pose)

    # -- views ----------------------------------------------------------------

    def joint_matrices(self) -> Dict[str, List[float]]:
        return {name: list(xf_to_mat4(xf)) for name, xf in self.joint_worlds.items()}

    def pose_update(self, controls: Optional[dict] = None) -> dict:
        msg = {
            "type": "pose_update",
            "revision": self.revision,
            "joints": self.joint_matrices(),
        }
        if controls is not None:
            msg["controls"] = controls
        return msg

    def describe(self) -> dict:
        controls = []
        for node in self.rig.graph.controls():
            p = node.params
            ctrl_name = p.get("controller", "")
            scene_node = None
            try:
                scene_node = self.rig.controllers.by_name(ctrl_name)
            except Exception:
                pass
            controls.append(
                {
                    "name": p["name"],
                    "type": p["value_type"],
                    "default": p.get("default"),
                    "soft_range": [p.get("soft_min"), p.get("soft_max")],
                    "controller": ctrl_name,
                    "shape": scene_node.shape_tag if scene_node else None,
                    "color": scene_node.color_tag if scene_node else None,
                    "rotate_order": p.get("rotate_order"),
                }
            )
        sk = self.rig.skeleton
        joints = [
            {
                "name": name,
                "parent": sk.joint_parent.get(name),
                "side": sk.sides.get(name, "C"),
                "rest_matrix": list(xf_to_mat4(xf)),
            }
            for name, xf in sk.rest_world.items()
        ]
        limbs = [
            {
                "name": tag,
                "blend_attr": meta["blend_attr"],
                "ik_control": meta["ik_control"],
                "joints": meta["joints"],
            }
            for tag, meta in self.rig.limbs.items()
            if meta.get("blend_attr")
        ]
        return {
            "type": "rig_description",
            "kind": self.rig.kind,
            "controls": controls,
            "skeleton": {"joints": joints},
            "limbs": limbs,
            "revision": self.revision,
        }


def _coerce_wire_value(value):
    if isinstance(value, list):
        return tuple(float(v) for v in value)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise RigError("control value must be a number or [x, y, z]")


def create_app(rig, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="rigforge session")
    state = RigSession(rig)
    viewers: List[WebSocket] = []
    lock = asyncio.Lock()
    app.state.rig_session = state

    async def broadcast(message: dict) -> None:
        dead = []
        for ws in viewers:
            try:
                await ws.send_json(message)
            except Exception:
                dead.append(ws)
        for ws in dead:
            if ws in viewers:
                viewers.remove(ws)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        viewers.append(ws)
        try:
            await ws.send_json(state.describe())
            await ws.send_json(state.pose_update())
            while True:
                try:
                    msg = await ws.receive_json()
                except WebSocketDisconnect:
                    raise
                except Exception:
                    await ws.send_json(
                        {"type": "error", "code": "malformed-message",
                         "message": "frames must be JSON objects"}
                    )
                    continue
                async with lock:
                    await _handle(msg, ws)
        except WebSocketDisconnect:
            pass
        finally:
            if ws in viewers:
                viewers.remove(ws)

    async def _handle(msg, ws: WebSocket) -> None:
        if not isinstance(msg, dict) or "type" not in msg:
            await ws.send_json(
                {"type": "error", "code": "malformed-message",
                 "message": "missing message type"}
            )
            return
        kind = msg["type"]
        try:
            if kind == "set_control":
                state.set_control(msg.get("name"), msg.get("value"))
                await broadcast(state.pose_update())
            elif kind == "load_pose":
                pose_doc = msg.get("pose")
                if not isinstance(pose_doc, dict):
                    raise RigError("load_pose needs a pose object")
                if "controls" not in pose_doc:
                    pose_doc = {"controls": pose_doc}
                state.load_pose(pose_from_json(pose_doc))
                await broadcast(state.pose_update(controls=dict(state.pose)))
            elif kind == "switch_mode":
                state.switch_limb(
                    msg.get("limb"), msg.get("mode"), bool(msg.get("match", True))
                )
                await broadcast(state.pose_update(controls=dict(state.pose)))
            else:
                await ws.send_json(
                    {"type": "error", "code": "malformed-message",
                     "message": f"unknown message type {kind!r}"}
                )
        except RigError as exc:
            await ws.send_json(
                {"type": "error", "code": exc.code, "message": str(exc)}
            )
        except Exception as exc:  # defensive: session must survive bad input
            await ws.send_json(
                {"type": "error", "code": "internal", "message": str(exc)}
            )

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
