"""File formats and canonical JSON serialization.

Every artifact (templates, rigs, poses, baked animation, reports) is
versioned JSON written with sorted keys and shortest round-trip float
formatting, so identical inputs always produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional

from .errors import SchemaError
from .graph import ControlPose, RigGraph
from .math3d import Vec3
from .scene import Scene

RIG_FORMAT = "rigforge_rig_v1"
POSE_FORMAT = "rigforge_pose_v1"
POSED_FORMAT = "rigforge_posed_v1"
ANIM_FORMAT = "rigforge_anim_v1"


def canonical_dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def dump_json(path, doc) -> None:
    Path(path).write_text(canonical_dumps(doc), encoding="utf-8")


def load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}", "/") from exc


# ---------------------------------------------------------------------------
# Rig files
# ---------------------------------------------------------------------------


def rig_fingerprint(doc: dict) -> str:
    """Stable content hash over the structural parts of a rig document."""
    core = {k: doc.get(k) for k in ("kind", "options", "skeleton", "graph")}
    payload = json.dumps(core, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def rig_to_json(rig, validation: Optional[dict] = None) -> dict:
    doc = {
        "format": RIG_FORMAT,
        "kind": rig.kind,
        "options": rig.options.to_json(),
        "skeleton": rig.skeleton.to_json(),
        "graph": rig.graph.to_json(),
        "controllers": rig.controllers.to_json(),
        "limbs": rig.limbs,
        "exports": {k: list(v) for k, v in rig.exports.items()},
        "export_rest_pos": {k: list(v) for k, v in rig.export_rest_pos.items()},
        "part_dependencies": dict(rig.part_dependencies),
    }
    doc["fingerprint"] = rig_fingerprint(doc)
    if validation is not None:
        doc["validation"] = validation
    return doc


def rig_from_json(doc: dict):
    from .compiler.rig import Rig, RigBuildOptions
    from .compiler.skeleton import Skeleton

    if not isinstance(doc, dict) or doc.get("format") != RIG_FORMAT:
        raise SchemaError(f"expected {RIG_FORMAT}", "/format")
    for key in ("skeleton", "graph", "controllers"):
        if key not in doc:
            raise SchemaError(f"missing {key!r}", f"/{key}")
    rig = Rig(
        kind=doc.get("kind", "biped"),
        skeleton=Skeleton.from_json(doc["skeleton"]),
        graph=RigGraph.from_json(doc["graph"]),
        controllers=Scene.from_json(doc["controllers"]),
        options=RigBuildOptions.from_json(doc.get("options", {})),
        limbs=dict(doc.get("limbs", {})),
        exports={k: tuple(v) for k, v in doc.get("exports", {}).items()},
        export_rest_pos={
            k: Vec3(*v) for k, v in doc.get("export_rest_pos", {}).items()
        },
        part_dependencies=dict(doc.get("part_dependencies", {})),
    )
    return rig


def save_rig(path, rig, validation: Optional[dict] = None) -> dict:
    doc = rig_to_json(rig, validation)
    dump_json(path, doc)
    return doc


def load_rig(path):
    return rig_from_json(load_json(path))


# ---------------------------------------------------------------------------
# Poses
# ---------------------------------------------------------------------------


def pose_to_json(pose: ControlPose, rig_hash: Optional[str] = None,
                 time: Optional[float] = None) -> dict:
    doc = {"format": POSE_FORMAT, "controls": _encode_pose(pose)}
    if rig_hash is not None:
        doc["rig"] = rig_hash
    if time is not None:
        doc["time"] = time
    return doc


def _encode_pose(pose: ControlPose) -> dict:
    out = {}
    for name, value in pose.items():
        if isinstance(value, (list, tuple)):
            out[name] = [float(v) for v in value]
        else:
            out[name] = float(value)
    return out


def pose_from_json(doc: dict) -> ControlPose:
    if not isinstance(doc, dict):
        raise SchemaError("pose must be an object", "/")
    if doc.get("format", POSE_FORMAT) != POSE_FORMAT:
        raise SchemaError(f"expected {POSE_FORMAT}", "/format")
    controls = doc.get("controls")
    if not isinstance(controls, dict):
        raise SchemaError("missing controls table", "/controls")
    pose = ControlPose()
    for name, value in controls.items():
        if isinstance(value, list):
            if len(value) != 3:
                raise SchemaError("vector values need 3 entries", f"/controls/{name}")
            pose[name] = tuple(float(v) for v in value)
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            pose[name] = float(value)
        else:
            raise SchemaError("value must be number or [x, y, z]", f"/controls/{name}")
    return pose


# ---------------------------------------------------------------------------
# Baked outputs
# ---------------------------------------------------------------------------


def posed_to_json(joint_worlds, fingerprint: Optional[str] = None) -> dict:
    doc = {
        "format": POSED_FORMAT,
        "joints": {name: list(mat) for name, mat in joint_worlds.matrices().items()},
    }
    if fingerprint:
        doc["rig"] = fingerprint
    return doc


def anim_to_json(frames) -> dict:
    """frames: iterable of (time, JointPoseMap)."""
    return {
        "format": ANIM_FORMAT,
        "frames": [
            {
                "time": float(t),
                "joints": {name: list(m) for name, m in worlds.matrices().items()},
            }
            for t, worlds in frames
        ],
    }
