"""Whole-character assembly and the sided build wrappers.

Left limbs build directly; right limbs build once in canonical (left)
space from reflected geometry and are then conjugated across the sagittal
plane, so both sides share one code path and mirror each other exactly.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from ..errors import MissingPartError, UnknownPartError
from ..graph import RigGraph
from ..math3d import ONE3, Quat, Vec3, Xform, vlerp
from ..naming import mirror_control_name, mirrored_name
from ..scene import Scene
from ..widgets import WidgetTemplate
from .parts import (
    Wire,
    _offset_xf,
    build_arm_canonical,
    build_fingers_canonical,
    build_leg_canonical,
    build_root,
    build_spine,
    build_neck_head,
    build_tail,
)
from .rig import (
    PartBuild,
    Rig,
    RigBuildOptions,
    conj_point,
    conj_quat,
    conjugate_part,
    materialize_mirrored_controllers,
)
from .skeleton import Skeleton, mirror_quat, skeletonize


def _canon_xf(rig: Rig, joint: str, mirror: bool) -> Xform:
    xf = Xform(
        rig.skeleton.rest_position(joint), rig.skeleton.rest_orientation(joint), ONE3
    )
    if not mirror:
        return xf
    return Xform(conj_point(xf.t), mirror_quat(xf.q), ONE3)


def _canon_name(joint: str, mirror: bool) -> str:
    return mirrored_name(joint) if mirror else joint


def _mirror_meta(meta: dict) -> dict:
    out = {}
    for key, value in meta.items():
        if key in ("joints", "fk_controls", "twist_joints"):
            out[key] = [mirrored_name(v) for v in value]
        elif key in ("ik_control", "pole_control", "hand_control"):
            out[key] = mirrored_name(value)
        elif key in ("blend_attr", "stretch_attr", "lock_attr"):
            out[key] = mirror_control_name(value) if value else value
        elif key == "rest":
            out[key] = {k: [-v[0], v[1], v[2]] for k, v in value.items()}
        elif key == "fk_rest_pos":
            out[key] = [[-p[0], p[1], p[2]] for p in value]
        elif key in ("fk_orients",):
            out[key] = [list(conj_quat(q)) for q in value]
        elif key == "end_orient":
            out[key] = list(conj_quat(value))
        elif key == "fingers":
            out[key] = {f: [mirrored_name(j) for j in js] for f, js in value.items()}
        elif key == "part":
            out[key] = value  # replaced by the wrapper
        else:
            out[key] = value
    return out


def _delete_part_raw(graph: RigGraph, part: str) -> None:
    """Drop a scaffold part outright (nothing may consume its outputs)."""
    ids = set(graph.parts.get(part, ()))
    for key in [k for k in graph.connections if k[0] in ids]:
        src = graph.connections.pop(key)
        graph._downstream.get(src[0], set()).discard(key[0])
    for nid in ids:
        graph.nodes.pop(nid, None)
        graph._downstream.pop(nid, None)
    graph.parts.pop(part, None)
    for down in graph._downstream.values():
        down -= ids


def _build_sided(rig: Rig, part: str, side: str, canonical_fn) -> Dict[str, Wire]:
    """Run a canonical builder for L directly or via conjugation for R."""
    if side == "L":
        b = PartBuild(rig, part, register_scene=True)
        result = canonical_fn(b)
        if result.get("meta"):
            rig.limbs[part] = result["meta"]
        return dict(result.get("exports", {}))
    scaffold = f"__canon_{part}"
    b = PartBuild(rig, scaffold, register_scene=False)
    result = canonical_fn(b)
    mapped = conjugate_part(rig, b, part, imported={})
    _delete_part_raw(rig.graph, scaffold)
    materialize_mirrored_controllers(rig, b.scene_specs)
    exports = {
        name: mapped[wire] for name, wire in result.get("exports", {}).items()
    }
    if result.get("meta"):
        meta = _mirror_meta(result["meta"])
        meta["part"] = part
        rig.limbs[part] = meta
    return exports


from contextlib import contextmanager


@contextmanager
def _canonical_rest(skeleton: Skeleton, canon: Dict[str, Xform]):
    """Temporarily expose canonical-side rest transforms under canonical
    joint names so a left-space builder can look them up."""
    saved: Dict[str, Optional[Xform]] = {}
    for name, xf in canon.items():
        saved[name] = skeleton.rest_world.get(name)
        skeleton.rest_world[name] = xf
    try:
        yield
    finally:
        for name, prev in saved.items():
            if prev is None:
                skeleton.rest_world.pop(name, None)
            else:
                skeleton.rest_world[name] = prev


def build_arm(rig: Rig, side: str, options: RigBuildOptions) -> Dict[str, Wire]:
    part = f"arm{side}"
    joints = rig.skeleton.part_joints(part)
    if not joints:
        raise MissingPartError(f"skeleton has no {part!r} joints")
    mirror = side == "R"
    clav = next((j for j in joints if "clav" in j), None)
    chain = [j for j in joints if "clav" not in j]
    if len(chain) != 3:
        raise MissingPartError(f"{part!r} needs shoulder/elbow/wrist joints")

    geo: Dict[str, object] = {}
    canon_rest: Dict[str, Xform] = {}
    if clav is None:
        # part rigs without a clavicle: treat the shoulder as the attach
        geo["clav"] = _canon_xf(rig, chain[0], mirror)
        geo["clav_name"] = None
    else:
        geo["clav"] = _canon_xf(rig, clav, mirror)
        geo["clav_name"] = _canon_name(clav, mirror)
        canon_rest[geo["clav_name"]] = geo["clav"]
    for role, joint in zip(("shoulder", "elbow", "wrist"), chain):
        geo[role] = _canon_xf(rig, joint, mirror)
        geo[f"{role}_name"] = _canon_name(joint, mirror)
        canon_rest[geo[f"{role}_name"]] = geo[role]
    n_twist = options.twist_joints
    geo["twist_names"] = [f"L_armTwist{k + 1}_jnt" for k in range(n_twist)]

    attach_actual = (
        conj_point(geo["clav"].t) if mirror else geo["clav"].t
    )
    chest_wire, chest_pos_actual = _attach_wire(rig, "chestCtrl", attach_actual)
    chest_pos_canon = conj_point(chest_pos_actual) if mirror else chest_pos_actual

    def canonical(b: PartBuild):
        with _canonical_rest(rig.skeleton, canon_rest):
            return build_arm_canonical(b, rig, options, geo, chest_wire, chest_pos_canon)

    exports = _build_sided(rig, part, side, canonical)

    # auxiliary twist joints on the actual side
    if n_twist > 0:
        elbow_j, wrist_j = chain[1], chain[2]
        e = rig.skeleton.rest_world[elbow_j]
        w = rig.skeleton.rest_world[wrist_j]
        for k in range(n_twist):
            name = f"{side}_armTwist{k + 1}_jnt"
            pos = vlerp(e.t, w.t, (k + 1) / n_twist)
            rig.skeleton.add_auxiliary_joint(
                name, part, side, elbow_j, Xform(pos, e.q, ONE3)
            )
    rig.exports[f"wrist{side}"] = exports["wrist"]
    rig.export_rest_pos[f"wrist{side}"] = rig.skeleton.rest_position(chain[2])
    return exports


def build_fingers(rig: Rig, side: str, options: RigBuildOptions) -> Dict[str, Wire]:
    part = f"fingers{side}"
    joints = rig.skeleton.part_joints(part)
    if not joints:
        raise MissingPartError(f"skeleton has no {part!r} joints")
    mirror = side == "R"

    fingers: Dict[str, List[str]] = {}
    for joint in joints:
        base = joint.split("_", 1)[1].rsplit("_", 1)[0]  # e.g. thumb1
        fname = base.rstrip("0123456789")
        fingers.setdefault(fname, []).append(joint)
    canon_fingers = {
        f: [_canon_name(j, mirror) for j in js] for f, js in fingers.items()
    }

    wrist_export = f"wrist{side}"
    if wrist_export in rig.exports:
        wrist_wire = rig.exports[wrist_export]
        wrist_pos_actual = rig.export_rest_pos[wrist_export]
        arm_part = f"arm{side}"
        wrist_joint = rig.limbs[arm_part]["joints"][2]
        wrist_rest_actual = rig.skeleton.rest_world[wrist_joint]
    else:
        # standalone finger rigs hang off a synthesized wrist frame
        bases = [js[0] for js in fingers.values()]
        centroid = Vec3(
            sum(rig.skeleton.rest_position(j)[0] for j in bases) / len(bases),
            sum(rig.skeleton.rest_position(j)[1] for j in bases) / len(bases),
            sum(rig.skeleton.rest_position(j)[2] for j in bases) / len(bases),
        )
        wrist_rest_actual = Xform(centroid, Quat(1.0, 0.0, 0.0, 0.0), ONE3)
        pb = PartBuild(rig, "root")
        const = pb.const(f"attach.{part}.wrist", "transform", _offset_xf(centroid))
        wrist_wire = (const, "value")
    wrist_rest_canon = (
        Xform(conj_point(wrist_rest_actual.t), mirror_quat(wrist_rest_actual.q), ONE3)
        if mirror
        else wrist_rest_actual
    )
    canon_rest = {
        _canon_name(j, mirror): _canon_xf(rig, j, mirror) for j in joints
    }

    def canonical(b: PartBuild):
        with _canonical_rest(rig.skeleton, canon_rest):
            return build_fingers_canonical(
                b, rig, options, canon_fingers, wrist_wire, wrist_rest_canon
            )

    exports = _build_sided(rig, part, side, canonical)
    if f"arm{side}" in rig.graph.parts:
        rig.part_dependencies[part] = f"arm{side}"
    return exports


def build_leg(
    rig: Rig,
    side: str,
    options: RigBuildOptions,
    quadruped: bool = False,
    part_prefix: str = "leg",
) -> Dict[str, Wire]:
    part = f"{part_prefix}{side}"
    joints = rig.skeleton.part_joints(part)
    if not joints:
        raise MissingPartError(f"skeleton has no {part!r} joints")
    mirror = side == "R"
    expected = 5
    if len(joints) != expected:
        raise MissingPartError(f"{part!r} needs {expected} joints, found {len(joints)}")

    geo: Dict[str, object] = {
        "joints": [_canon_name(j, mirror) for j in joints],
        "prefix": part_prefix,
    }
    if quadruped:
        attach_export = "chestCtrl" if part_prefix == "frontLeg" else "hipCtrl"
    else:
        attach_export = "hipCtrl"
    attach_wire, attach_pos_actual = _attach_wire(
        rig, attach_export, rig.skeleton.rest_position(joints[0])
    )
    attach_pos_canon = conj_point(attach_pos_actual) if mirror else attach_pos_actual

    canon_rest = {_canon_name(j, mirror): _canon_xf(rig, j, mirror) for j in joints}

    def canonical(b: PartBuild):
        with _canonical_rest(rig.skeleton, canon_rest):
            return build_leg_canonical(
                b, rig, options, geo, attach_wire, attach_pos_canon, quadruped
            )

    return _build_sided(rig, part, side, canonical)


def _attach_wire(rig: Rig, export: str, fallback_pos: Vec3) -> Tuple[Wire, Vec3]:
    """Existing export wire, or a rest-pose constant frame for part rigs.

    The returned position is the wire's actual (unreflected) rest position.
    """
    if export in rig.exports:
        return rig.exports[export], rig.export_rest_pos[export]
    pb = PartBuild(rig, "root")
    const = pb.const(
        f"attach.{export}.{len(rig.graph.nodes)}", "transform", _offset_xf(fallback_pos)
    )
    return (const, "value"), Vec3(*fallback_pos)


def assemble_character(
    template: WidgetTemplate, options: Optional[RigBuildOptions] = None
) -> Rig:
    """Skeletonize and rig every part the template carries."""
    options = options or RigBuildOptions()
    skeleton = skeletonize(template)
    rig = Rig(
        kind=template.kind,
        skeleton=skeleton,
        graph=RigGraph(),
        controllers=Scene(),
        options=options,
    )
    parts = skeleton.parts
    build_root(rig)
    if "spine" in parts:
        build_spine(rig, options)
    if "neckHead" in parts:
        build_neck_head(rig, options)
    for side in ("L", "R"):
        if f"arm{side}" in parts:
            build_arm(rig, side, options)
        if f"fingers{side}" in parts:
            build_fingers(rig, side, options)
        if f"leg{side}" in parts:
            build_leg(rig, side, options, quadruped=False, part_prefix="leg")
        if f"frontLeg{side}" in parts:
            build_leg(rig, side, options, quadruped=True, part_prefix="frontLeg")
        if f"hindLeg{side}" in parts:
            build_leg(rig, side, options, quadruped=True, part_prefix="hindLeg")
    if "tail" in parts:
        build_tail(rig, options)
    rig.graph.check()
    return rig
