"""Rig container, build options, the part-build helper, and mirroring.

Right-side limbs are compiled by building the canonical (left) side from
reflected geometry and then conjugating every node parameter across the
sagittal plane.  Because evaluation commutes with that conjugation, a
mirrored control pose produces exactly mirrored joint positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..errors import InvalidValueError
from ..graph import ControlPose, EvalSession, RigGraph, RigNode
from ..math3d import (
    ONE3,
    QUAT_IDENTITY,
    XFORM_IDENTITY,
    Quat,
    Transform,
    Vec3,
    Xform,
    q_from_mat3,
    q_mul,
    q_to_mat3,
    xf_mirror_x,
)
from ..naming import mirror_control_name, mirrored_name
from ..scene import Scene
from .skeleton import Skeleton, mirror_quat

SIDE_COLORS = {"L": "blue", "R": "red", "C": "yellow"}


@dataclass
class RigBuildOptions:
    stretch_spine: bool = True
    stretch_limbs: bool = True
    limb_lock: bool = True
    twist_joints: int = 3
    finger_attrs: bool = True
    default_mode: str = "ik"  # fk | ik

    def __post_init__(self):
        if self.twist_joints < 0:
            raise InvalidValueError("twist joint count must be >= 0")
        if self.default_mode not in ("fk", "ik"):
            raise InvalidValueError("default_mode must be 'fk' or 'ik'")

    def to_json(self) -> dict:
        return {
            "stretch_spine": self.stretch_spine,
            "stretch_limbs": self.stretch_limbs,
            "limb_lock": self.limb_lock,
            "twist_joints": self.twist_joints,
            "finger_attrs": self.finger_attrs,
            "default_mode": self.default_mode,
        }

    @staticmethod
    def from_json(doc: dict) -> "RigBuildOptions":
        return RigBuildOptions(**doc)


@dataclass
class Rig:
    kind: str
    skeleton: Skeleton
    graph: RigGraph
    controllers: Scene
    options: RigBuildOptions
    limbs: Dict[str, dict] = field(default_factory=dict)
    exports: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    export_rest_pos: Dict[str, Vec3] = field(default_factory=dict)
    part_dependencies: Dict[str, str] = field(default_factory=dict)

    def control_names(self) -> List[str]:
        return [n.params["name"] for n in self.graph.controls()]

    def session(self) -> EvalSession:
        return EvalSession(self.graph)

    def evaluate(self, pose: Optional[ControlPose] = None):
        return self.session().evaluate(pose)

    def parts(self) -> List[str]:
        return list(self.graph.parts)

    def removal_closure(self, part: str) -> List[str]:
        """The part plus everything anatomically hanging off it (a hand goes
        with its arm), children first."""
        doomed = {part}
        changed = True
        while changed:
            changed = False
            for child, parent in self.part_dependencies.items():
                if parent in doomed and child not in doomed and child in self.graph.parts:
                    doomed.add(child)
                    changed = True
        ordered = [p for p in doomed if p != part]
        ordered.append(part)
        return ordered

    def remove_part(self, part: str) -> None:
        for tag in self.removal_closure(part):
            self.graph.remove_part(tag)
            self.limbs = {
                k: meta for k, meta in self.limbs.items() if meta["part"] != tag
            }


# ---------------------------------------------------------------------------
# Build helper
# ---------------------------------------------------------------------------


class PartBuild:
    """Node factory for one body part: naming, wiring, controller scene."""

    def __init__(self, rig: Rig, part: str, register_scene: bool = True):
        self.rig = rig
        self.graph = rig.graph
        self.part = part
        self.created: List[str] = []
        self.register_scene = register_scene
        self.scene_specs: List[Tuple[str, Optional[str], Vec3, str, str]] = []

    # node creation -------------------------------------------------------

    def node(self, short: str, kind: str, **params) -> str:
        nid = f"{self.part}.{short}"
        self.graph.add(nid, kind, part=self.part, **params)
        self.created.append(nid)
        return nid

    def const(self, short: str, value_type: str, value) -> str:
        return self.node(short, "Constant", value_type=value_type, value=value)

    def control(
        self,
        controller: str,
        attr: str,
        value_type: str,
        default=None,
        soft: Optional[Tuple[float, float]] = None,
        rotate_order: str = "XYZ",
        forward_axis: Optional[str] = None,
        forward_sign: float = 1.0,
        forward_world_axis: Optional[Vec3] = None,
    ) -> str:
        name = f"{controller}.{attr}"
        if forward_axis is not None and forward_world_axis is None:
            unit = {"X": (1.0, 0.0, 0.0), "Y": (0.0, 1.0, 0.0), "Z": (0.0, 0.0, 1.0)}
            forward_world_axis = Vec3(*unit[forward_axis])
        return self.node(
            f"ctl.{controller}.{attr}",
            "ControlAttribute",
            name=name,
            value_type=value_type,
            default=default,
            soft_min=None if soft is None else soft[0],
            soft_max=None if soft is None else soft[1],
            hard_min=None,
            hard_max=None,
            rotate_order=rotate_order,
            forward_axis=forward_axis,
            forward_sign=forward_sign,
            forward_world_axis=forward_world_axis,
            controller=controller,
        )

    def link(self, src: str, dst: str, dst_port: str, src_port: str = "value") -> None:
        self.graph.connect(src, src_port, dst, dst_port)

    def wire(self, src: Tuple[str, str], dst: str, dst_port: str) -> None:
        self.graph.connect(src[0], src[1], dst, dst_port)

    def joint_out(
        self, joint: str, base: Tuple[str, str], local: Tuple[str, str]
    ) -> str:
        nid = self.node(f"out.{joint}", "JointOutput", joint=joint)
        self.wire(base, nid, "base")
        self.wire(local, nid, "local")
        return nid

    # controller scene ------------------------------------------------------

    def scene_controller(
        self,
        name: str,
        parent: Optional[str],
        rest_pos: Vec3,
        shape: str,
        side: str,
    ) -> Optional[str]:
        self.scene_specs.append((name, parent, Vec3(*rest_pos), shape, side))
        if not self.register_scene:
            return None
        return materialize_controller(self.rig, name, parent, Vec3(*rest_pos), shape, side)


def materialize_controller(
    rig: Rig, name: str, parent: Optional[str], rest_pos: Vec3, shape: str, side: str
) -> str:
    scene = rig.controllers
    parent_id = None
    parent_pos = Vec3(0.0, 0.0, 0.0)
    if parent is not None:
        try:
            parent_node = scene.by_name(parent)
        except Exception:
            # part rigs may lack the usual anchor; hang off the master
            parent_node = scene.by_name("C_master_ctrl")
        parent_id = parent_node.id
        w = scene.world_transform(parent_id).matrix()
        parent_pos = Vec3(w[3], w[7], w[11])
    local = Transform(rest_pos - parent_pos)
    return scene.add(
        name,
        "controller",
        local,
        parent=parent_id,
        node_id=name,
        color_tag=SIDE_COLORS[side],
        shape_tag=shape,
    )


# ---------------------------------------------------------------------------
# Sagittal conjugation of compiled parts
# ---------------------------------------------------------------------------

_D = (1.0, 1.0, -1.0)  # handedness fix on aim-frame posts
_S = (-1.0, 1.0, 1.0)


def conj_point(v) -> Vec3:
    return Vec3(-v[0], v[1], v[2])


def conj_quat(q) -> Quat:
    return mirror_quat(q)


def conj_xform(x: Xform) -> Xform:
    return xf_mirror_x(x)


def conj_frame_post(q) -> Quat:
    """Post-rotation rule for aim-derived frames.

    Aim frames are [aim, up x aim-completion, projected-up]; reflecting the
    aim and up inputs flips the middle column, so the conjugated post is
    diag(1,-1,1) * M * diag(-1,1,1).
    """
    m = q_to_mat3(q)
    out = []
    for r in range(3):
        for c in range(3):
            v = m[3 * r + c]
            if r == 1:
                v = -v
            if c == 0:
                v = -v
            out.append(v)
    return q_from_mat3(tuple(out))


def conj_frame_post_z(q) -> Quat:
    """Post-rotation rule for two-bone solver frames.

    The solver's roll hint is a cross product of reflected vectors, so the
    reflected frame flips its Z column instead: diag(1,1,-1) * M * diag(-1,1,1).
    """
    m = q_to_mat3(q)
    out = []
    for r in range(3):
        for c in range(3):
            v = m[3 * r + c]
            if r == 2:
                v = -v
            if c == 0:
                v = -v
            out.append(v)
    return q_from_mat3(tuple(out))


def conj_delta(v) -> Vec3:
    """Position deltas applied inside controller frames reflect plainly."""
    return conj_point(v)


def _mirror_id(node_id: str) -> str:
    return node_id.replace("L_", "R_") if "L_" in node_id else node_id


_GAIN_FLIP = {"X": 1.0, "Y": -1.0, "Z": -1.0}


def conjugate_params(kind: str, params: dict) -> dict:
    p = dict(params)
    if kind == "Constant":
        vt = p["value_type"]
        if vt == "vec3":
            p["value"] = conj_point(p["value"])
        elif vt == "rotation":
            p["value"] = conj_quat(p["value"])
        elif vt == "transform":
            p["value"] = conj_xform(p["value"])
    elif kind == "ControlAttribute":
        p["name"] = mirror_control_name(p["name"])
        p["controller"] = mirrored_name(p["controller"])
        d = p.get("default")
        if d is not None and p["value_type"] == "vec3":
            p["default"] = (-d[0], d[1], d[2])
        elif d is not None and p["value_type"] == "rotation":
            p["default"] = (d[0], -d[1], -d[2])
        if p.get("forward_world_axis") is not None:
            ax, ay, az = p["forward_world_axis"]
            # mirrored pose values flip on Y/Z channels but not X, so the
            # measured world rotation axis conjugates differently per channel
            if p.get("forward_axis") == "X":
                p["forward_world_axis"] = Vec3(ax, -ay, -az)
            else:
                p["forward_world_axis"] = Vec3(-ax, ay, az)
    elif kind == "PointConstraint":
        if p.get("offsets"):
            p["offsets"] = tuple(conj_point(o) for o in p["offsets"])
    elif kind == "OrientConstraint":
        if p.get("mode", "blend") == "aim":
            p["up_axis"] = conj_point(p.get("up_axis", (0.0, 0.0, 1.0)))
            p["post"] = conj_frame_post(p.get("post", QUAT_IDENTITY))
        else:
            if p.get("offsets"):
                p["offsets"] = tuple(conj_quat(q) for q in p["offsets"])
    elif kind == "ParentConstraint":
        if p.get("offset") is not None:
            p["offset"] = conj_xform(p["offset"])
        if p.get("pivot") is not None:
            p["pivot"] = conj_point(p["pivot"])
        if p.get("channels"):
            p["channels"] = tuple(
                (port, axis, gain * _GAIN_FLIP[axis]) for port, axis, gain in p["channels"]
            )
    elif kind == "TwoBoneIK":
        p["post_upper"] = conj_frame_post_z(p.get("post_upper", QUAT_IDENTITY))
        p["post_lower"] = conj_frame_post_z(p.get("post_lower", QUAT_IDENTITY))
        p["post_effector"] = conj_quat(p.get("post_effector", QUAT_IDENTITY))
        p["fallback_pole_dir"] = conj_point(p.get("fallback_pole_dir", (0.0, 0.0, 1.0)))
        p["roll_gain"] = -p.get("roll_gain", 1.0)
    elif kind == "SplineIK":
        p["posts"] = tuple(conj_frame_post(q) for q in p["posts"])
        p["deltas"] = tuple(conj_delta(d) for d in p["deltas"])
        p["up_axis"] = conj_point(p.get("up_axis", (0.0, 0.0, 1.0)))
        p["twist_gain"] = -p.get("twist_gain", 1.0)
    elif kind == "TwistDistributor":
        p["posts"] = tuple(conj_quat(q) for q in p.get("posts", ()))
    elif kind == "JointOutput":
        p["joint"] = mirrored_name(p["joint"])
    return p


def conjugate_part(
    rig: Rig,
    built: PartBuild,
    new_part: str,
    imported: Dict[str, Tuple[str, str]],
) -> Dict[str, Tuple[str, str]]:
    """Clone a canonical-side part across the sagittal plane.

    ``imported`` maps the original part's external source (node, port) pairs
    to the ones the mirrored part should consume.  Returns the mirrored
    exports for every (node, port) the original part exposed.
    """
    graph = rig.graph
    mapping: Dict[str, str] = {}
    for nid in built.created:
        node = graph.nodes[nid]
        new_id = f"{new_part}.{nid.split('.', 1)[1]}"
        new_id = _mirror_id(new_id)
        mapping[nid] = new_id
        graph.add(new_id, node.kind, part=new_part, **conjugate_params(node.kind, node.params))
    created_set = set(built.created)
    for (dst, dport), (src, sport) in list(graph.connections.items()):
        if dst not in created_set:
            continue
        if src in created_set:
            graph.connect(mapping[src], sport, mapping[dst], dport)
        else:
            nsrc, nsport = imported.get((src, sport), (src, sport))
            graph.connect(nsrc, nsport, mapping[dst], dport)
    return {
        (nid, port): (mapping[nid], port)
        for nid in built.created
        for port in graph.nodes[nid].outputs
    }


def materialize_mirrored_controllers(
    rig: Rig, specs: Sequence[Tuple[str, Optional[str], Vec3, str, str]]
) -> None:
    """Right-side scene controllers from canonical-side specs."""
    for name, parent, pos, shape, _side in specs:
        m_name = mirrored_name(name) if name.startswith("L_") else name
        m_parent = parent
        if parent is not None and parent.startswith("L_"):
            m_parent = mirrored_name(parent)
        materialize_controller(
            rig, m_name, m_parent, Vec3(-pos[0], pos[1], pos[2]), shape, "R"
        )
