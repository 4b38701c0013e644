"""Per-body-part rig builders.

Every builder works in master-relative space on "canonical side" geometry
(left, or center).  Controller frames rest with identity orientation so the
animator's channels read zero at the default pose; joint aim frames enter
only as final post-offsets right before joint outputs.  Right-side parts
are produced by :func:`rigforge.compiler.rig.conjugate_part`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..errors import MissingPartError
from ..graph import _aim_quat
from ..math3d import (
    ONE3,
    QUAT_IDENTITY,
    XFORM_IDENTITY,
    Quat,
    Vec3,
    Xform,
    q_conjugate,
    q_mul,
    q_rotate,
    vdist,
    vlerp,
)
from ..solvers import ArcTable, CubicBezier, DrivenKey, TwoBoneChain, pole_point_from_chain, solve_two_bone_ik
from .rig import PartBuild, Rig, RigBuildOptions
from .skeleton import Skeleton

Wire = Tuple[str, str]


def _offset_xf(translation: Vec3, rotation: Quat = QUAT_IDENTITY) -> Xform:
    return Xform(Vec3(*translation), Quat(*rotation), ONE3)


def _rot_offset(rotation: Quat) -> Xform:
    return Xform(Vec3(0.0, 0.0, 0.0), Quat(*rotation), ONE3)


def _require_part(skeleton: Skeleton, part: str) -> List[str]:
    joints = skeleton.part_joints(part)
    if not joints:
        raise MissingPartError(f"skeleton has no {part!r} joints")
    return joints


# ---------------------------------------------------------------------------
# Root / master
# ---------------------------------------------------------------------------


def build_root(rig: Rig) -> PartBuild:
    """Master controller plus the frozen root joint and its hip controller."""
    b = PartBuild(rig, "root")
    sk = rig.skeleton

    rel_base = b.const("base", "transform", XFORM_IDENTITY)
    b.control("C_master_ctrl", "t", "vec3", rotate_order="XYZ")
    b.control(
        "C_master_ctrl", "r", "rotation", rotate_order="XYZ", forward_axis="Y"
    )
    master = b.node("master", "ParentConstraint", use_t=True, use_r=True)
    b.link(rel_base, master, "target")
    b.link("root.ctl.C_master_ctrl.t", master, "t")
    b.link("root.ctl.C_master_ctrl.r", master, "r")
    b.scene_controller("C_master_ctrl", None, Vec3(0.0, 0.0, 0.0), "box", "C")

    rig.exports["rel_base"] = (rel_base, "value")
    rig.exports["master"] = (master, "value")
    rig.export_rest_pos["rel_base"] = Vec3(0.0, 0.0, 0.0)
    rig.export_rest_pos["master"] = Vec3(0.0, 0.0, 0.0)
    return b


def build_hip(rig: Rig, b: PartBuild) -> None:
    """Hip/root controller: drives the frozen root joint.

    Lives inside the spine part so detaching the torso takes its controls
    along, keeping every other part's evaluation untouched.
    """
    sk = rig.skeleton
    rel_base = rig.exports["rel_base"][0]
    master = rig.exports["master"]
    root_joint = sk.part_joints("root")[0]
    root_pos = sk.rest_position(root_joint)
    root_orient = sk.rest_orientation(root_joint)

    b.control("C_hip_ctrl", "t", "vec3")
    b.control("C_hip_ctrl", "r", "rotation", rotate_order="ZXY", forward_axis="X")
    hip = b.node(
        "hipCtrl", "ParentConstraint", offset=_offset_xf(root_pos), use_t=True, use_r=True
    )
    b.link(rel_base, hip, "target")
    b.link(f"{b.part}.ctl.C_hip_ctrl.t", hip, "t")
    b.link(f"{b.part}.ctl.C_hip_ctrl.r", hip, "r")

    root_local = b.node(
        "rootJnt", "ParentConstraint", offset=_rot_offset(root_orient)
    )
    b.link(hip, root_local, "target")
    b.joint_out(root_joint, master, (root_local, "value"))

    # scene-side root freeze: channels read zero at the default pose
    sk.scene.freeze_root(sk.scene.by_name(root_joint).id)

    b.scene_controller("C_hip_ctrl", "C_master_ctrl", root_pos, "box", "C")
    rig.exports["hipCtrl"] = (hip, "value")
    rig.export_rest_pos["hipCtrl"] = root_pos


# ---------------------------------------------------------------------------
# Spline helpers
# ---------------------------------------------------------------------------


@dataclass
class SplineRest:
    cvs: Tuple[Vec3, Vec3, Vec3, Vec3]
    s_rest: List[float]
    total_rest: float
    posts: List[Quat]
    deltas: List[Vec3]


def _spline_rest(
    joints: Sequence[str],
    skeleton: Skeleton,
    start: Vec3,
    end: Vec3,
    up_axis: Vec3,
) -> SplineRest:
    """Rest-pose spline data: cv layout, arc positions and exact-rest posts."""
    positions = [skeleton.rest_position(j) for j in joints]
    chain = [Vec3(*start)] + positions[1:-1] + [Vec3(*end)]
    # cv rest layout: ends at the bound frames, interior at arc thirds of
    # the joint polyline, which makes straight chains constant-speed
    cums = [0.0]
    for a, b in zip(positions, positions[1:]):
        cums.append(cums[-1] + vdist(a, b))
    total_chain = cums[-1]

    def at_fraction(f: float) -> Vec3:
        s = f * total_chain
        for i in range(len(cums) - 1):
            if s <= cums[i + 1] or i == len(cums) - 2:
                seg = cums[i + 1] - cums[i]
                t = 0.0 if seg == 0 else (s - cums[i]) / seg
                return vlerp(positions[i], positions[i + 1], t)
        return positions[-1]

    cvs = (
        Vec3(*start),
        at_fraction(1.0 / 3.0),
        at_fraction(2.0 / 3.0),
        Vec3(*end),
    )
    curve = CubicBezier(*cvs)
    # must match the runtime spline node's table settings exactly so the
    # rest corrections cancel at the default pose
    table = ArcTable(curve, segments=12, newton=1)
    fractions = [c / total_chain for c in cums]
    s_rest = [f * table.total for f in fractions]
    posts: List[Quat] = []
    deltas: List[Vec3] = []
    for j, s in zip(joints, s_rest):
        t = table.param_at_length(s)
        tangent = curve.derivative(t)
        frame = _aim_quat((0, 0, 0), tangent, up_axis, QUAT_IDENTITY, False)
        posts.append(q_mul(q_conjugate(frame), skeleton.rest_orientation(j)))
        pos = curve.point(t)
        deltas.append(skeleton.rest_position(j) - pos)
    return SplineRest(cvs, s_rest, table.total, posts, deltas)


def _add_spline(
    b: PartBuild,
    short: str,
    joints: Sequence[str],
    rest: SplineRest,
    base_frame: Wire,
    tip_frame: Wire,
    base_rest_pos: Vec3,
    tip_rest_pos: Vec3,
    twist_src: Optional[Wire],
    stretch_src: Optional[Wire],
    up_axis: Vec3,
) -> str:
    """Curve CV constraints (2/3 - 1/3 end weighting) plus the spline node."""
    g = b.graph
    weights = [(1.0, 0.0), (2.0 / 3.0, 1.0 / 3.0), (1.0 / 3.0, 2.0 / 3.0), (0.0, 1.0)]
    spline = b.node(
        short,
        "SplineIK",
        joints=len(joints),
        s_rest=tuple(rest.s_rest),
        total_rest=rest.total_rest,
        posts=tuple(rest.posts),
        deltas=tuple(rest.deltas),
        up_axis=up_axis,
        twist_gain=1.0,
    )
    for i, (wb, wt) in enumerate(weights):
        if wb == 1.0:
            pc = b.node(
                f"{short}.cv{i}", "PointConstraint", targets=1,
                offsets=(rest.cvs[i] - base_rest_pos,),
            )
            b.wire(base_frame, pc, "target0")
        elif wt == 1.0:
            pc = b.node(
                f"{short}.cv{i}", "PointConstraint", targets=1,
                offsets=(rest.cvs[i] - tip_rest_pos,),
            )
            b.wire(tip_frame, pc, "target0")
        else:
            pc = b.node(
                f"{short}.cv{i}",
                "PointConstraint",
                targets=2,
                weights=(wb, wt),
                offsets=(rest.cvs[i] - base_rest_pos, rest.cvs[i] - tip_rest_pos),
            )
            b.wire(base_frame, pc, "target0")
            b.wire(tip_frame, pc, "target1")
        b.link(pc, spline, f"cv{i}")
    base_rot = b.node(f"{short}.baseRot", "OrientConstraint", targets=1, offsets=(QUAT_IDENTITY,))
    b.wire(base_frame, base_rot, "target0")
    tip_rot = b.node(f"{short}.tipRot", "OrientConstraint", targets=1, offsets=(QUAT_IDENTITY,))
    b.wire(tip_frame, tip_rot, "target0")
    b.link(base_rot, spline, "base_rot")
    b.link(tip_rot, spline, "tip_rot")
    if twist_src is None:
        zero = b.const(f"{short}.twist0", "scalar", 0.0)
        b.link(zero, spline, "twist")
    else:
        b.wire(twist_src, spline, "twist")
    if stretch_src is None:
        off = b.const(f"{short}.stretch0", "scalar", 0.0)
        b.link(off, spline, "stretch_weight")
    else:
        b.wire(stretch_src, spline, "stretch_weight")
    return spline


# ---------------------------------------------------------------------------
# Spine
# ---------------------------------------------------------------------------


def build_spine(rig: Rig, options: RigBuildOptions) -> PartBuild:
    """Hip/chest controllers, FK layer, spline chain with stretch."""
    b = PartBuild(rig, "spine")
    sk = rig.skeleton
    spine_joints = _require_part(sk, "spine")
    if sk.part_joints("root"):
        build_hip(rig, b)
    if "hipCtrl" in rig.exports:
        hip_wire = rig.exports["hipCtrl"]
        hip_pos = rig.export_rest_pos["hipCtrl"]
    else:
        const = b.const("attachHip", "transform", _offset_xf(sk.rest_position(spine_joints[0])))
        hip_wire = (const, "value")
        hip_pos = sk.rest_position(spine_joints[0])
    rel_base = rig.exports["rel_base"]
    base_pos = sk.rest_position(spine_joints[0])
    chest_pos = sk.rest_position(spine_joints[-1])

    # FK layer: three rotation controllers spaced along the spine
    n_fk = 3
    fk_positions = [
        vlerp(base_pos, chest_pos, (i + 1) / (n_fk + 1)) for i in range(n_fk)
    ]
    prev: Wire = hip_wire
    prev_pos = hip_pos
    for i, pos in enumerate(fk_positions, start=1):
        name = f"C_spineFk{i}_ctrl"
        b.control(name, "r", "rotation", rotate_order="ZXY", forward_axis="X")
        fk = b.node(
            f"fk{i}", "ParentConstraint", offset=_offset_xf(pos - prev_pos), use_r=True
        )
        b.wire(prev, fk, "target")
        b.link(f"spine.ctl.{name}.r", fk, "r")
        b.scene_controller(
            name,
            "C_hip_ctrl" if i == 1 else f"C_spineFk{i - 1}_ctrl",
            pos,
            "circle",
            "C",
        )
        prev = (fk, "value")
        prev_pos = pos

    # chest controller: follow switch between the FK layer and master space
    b.control("C_chest_ctrl", "t", "vec3")
    b.control("C_chest_ctrl", "r", "rotation", rotate_order="ZXY", forward_axis="X")
    b.control("C_chest_ctrl", "follow", "scalar", default=1.0, soft=(0.0, 1.0))
    chest_fk = b.node(
        "chestFkSpace", "ParentConstraint", offset=_offset_xf(chest_pos - prev_pos)
    )
    b.wire(prev, chest_fk, "target")
    chest_ind = b.const("chestIndSpace", "transform", _offset_xf(chest_pos))
    chest_space = b.node("chestSpace", "Blend", value_type="transform")
    b.link(chest_ind, chest_space, "a")
    b.link(chest_fk, chest_space, "b")
    b.link("spine.ctl.C_chest_ctrl.follow", chest_space, "weight")
    chest = b.node("chestCtrl", "ParentConstraint", use_t=True, use_r=True)
    b.link(chest_space, chest, "target")
    b.link("spine.ctl.C_chest_ctrl.t", chest, "t")
    b.link("spine.ctl.C_chest_ctrl.r", chest, "r")
    b.scene_controller("C_chest_ctrl", f"C_spineFk{n_fk}_ctrl", chest_pos, "box", "C")

    stretch_src: Optional[Wire] = None
    if options.stretch_spine:
        b.control("C_chest_ctrl", "stretch", "scalar", default=1.0, soft=(0.0, 1.0))
        stretch_src = ("spine.ctl.C_chest_ctrl.stretch", "value")

    rest = _spline_rest(spine_joints, sk, base_pos, chest_pos, Vec3(0.0, 0.0, 1.0))
    spline = _add_spline(
        b,
        "ik",
        spine_joints,
        rest,
        hip_wire,
        (chest, "value"),
        hip_pos,
        chest_pos,
        None,
        stretch_src,
        Vec3(0.0, 0.0, 1.0),
    )
    master = rig.exports["master"]
    for i, joint in enumerate(spine_joints):
        b.joint_out(joint, master, (spline, f"joint{i}"))

    rig.exports["chestCtrl"] = (chest, "value")
    rig.export_rest_pos["chestCtrl"] = chest_pos
    return b


# ---------------------------------------------------------------------------
# Neck / head
# ---------------------------------------------------------------------------


def build_neck_head(rig: Rig, options: RigBuildOptions) -> PartBuild:
    """Neck spline bound chest-to-head, FK head, follow switch."""
    b = PartBuild(rig, "neckHead")
    sk = rig.skeleton
    joints = _require_part(sk, "neckHead")
    neck_joints, head_joint = joints[:-1], joints[-1]
    rel_base = rig.exports["rel_base"]
    master = rig.exports["master"]
    neck_pos = sk.rest_position(neck_joints[0])
    head_pos = sk.rest_position(head_joint)
    if "chestCtrl" in rig.exports:
        chest_wire = rig.exports["chestCtrl"]
        chest_pos = rig.export_rest_pos["chestCtrl"]
    else:
        const = b.const("attachChest", "transform", _offset_xf(neck_pos))
        chest_wire = (const, "value")
        chest_pos = neck_pos

    b.control("C_neck_ctrl", "r", "rotation", rotate_order="ZXY", forward_axis="X")
    b.control("C_neck_ctrl", "follow", "scalar", default=1.0, soft=(0.0, 1.0))
    b.control("C_neck_ctrl", "twist", "scalar", default=0.0, soft=(-180.0, 180.0))
    b.control("C_neck_ctrl", "stretch", "scalar", default=1.0, soft=(0.0, 1.0))

    neck_pos_pc = b.node(
        "neckPos", "PointConstraint", targets=1, offsets=(neck_pos - chest_pos,)
    )
    b.wire(chest_wire, neck_pos_pc, "target0")
    world_frame = b.const("neckWorldSpace", "transform", XFORM_IDENTITY)
    neck_orient = b.node(
        "neckOrient",
        "OrientConstraint",
        targets=2,
        offsets=(QUAT_IDENTITY, QUAT_IDENTITY),
    )
    b.link(world_frame, neck_orient, "target0")
    b.wire(chest_wire, neck_orient, "target1")
    b.link("neckHead.ctl.C_neck_ctrl.follow", neck_orient, "weight")
    neck_space = b.node("neckSpace", "ParentConstraint", use_t=True, use_r=True)
    b.wire(rel_base, neck_space, "target")
    b.link(neck_pos_pc, neck_space, "t")
    b.link(neck_orient, neck_space, "r")
    neck_ctrl = b.node("neckCtrl", "ParentConstraint", use_r=True)
    b.link(neck_space, neck_ctrl, "target")
    b.link("neckHead.ctl.C_neck_ctrl.r", neck_ctrl, "r")

    b.control("C_head_ctrl", "t", "vec3")
    b.control("C_head_ctrl", "r", "rotation", rotate_order="ZXY", forward_axis="X")
    head_ctrl = b.node(
        "headCtrl",
        "ParentConstraint",
        offset=_offset_xf(head_pos - neck_pos),
        use_t=True,
        use_r=True,
    )
    b.link(neck_ctrl, head_ctrl, "target")
    b.link("neckHead.ctl.C_head_ctrl.t", head_ctrl, "t")
    b.link("neckHead.ctl.C_head_ctrl.r", head_ctrl, "r")

    rest = _spline_rest(
        list(neck_joints) + [head_joint], sk, neck_pos, head_pos, Vec3(0.0, 0.0, 1.0)
    )
    # spline drives the neck joints; the head joint rides its controller
    neck_rest = SplineRest(
        rest.cvs,
        rest.s_rest[: len(neck_joints)],
        rest.total_rest,
        rest.posts[: len(neck_joints)],
        rest.deltas[: len(neck_joints)],
    )
    spline = _add_spline(
        b,
        "ik",
        neck_joints,
        neck_rest,
        (neck_ctrl, "value"),
        (head_ctrl, "value"),
        neck_pos,
        head_pos,
        ("neckHead.ctl.C_neck_ctrl.twist", "value"),
        ("neckHead.ctl.C_neck_ctrl.stretch", "value"),
        Vec3(0.0, 0.0, 1.0),
    )
    for i, joint in enumerate(neck_joints):
        b.joint_out(joint, master, (spline, f"joint{i}"))
    head_local = b.node(
        "headJnt",
        "ParentConstraint",
        offset=_rot_offset(sk.rest_orientation(head_joint)),
    )
    b.link(head_ctrl, head_local, "target")
    b.joint_out(head_joint, master, (head_local, "value"))

    b.scene_controller("C_neck_ctrl", "C_chest_ctrl", neck_pos, "circle", "C")
    b.scene_controller("C_head_ctrl", "C_neck_ctrl", head_pos, "box", "C")
    rig.exports["neckCtrl"] = (neck_ctrl, "value")
    rig.exports["headCtrl"] = (head_ctrl, "value")
    return b


# ---------------------------------------------------------------------------
# Limb shared pieces
# ---------------------------------------------------------------------------


def _stretch_subgraph(
    b: PartBuild,
    short: str,
    enabled: bool,
    root_pos: str,
    target_pos: str,
    full_length: float,
    attr_wire: Optional[Wire],
) -> Wire:
    """Distance/ratio/condition chain implementing limb stretch."""
    one = b.const(f"{short}.one", "scalar", 1.0)
    if not enabled:
        return (one, "value")
    dist = b.node(f"{short}.dist", "Distance")
    b.link(root_pos, dist, "a")
    b.link(target_pos, dist, "b")
    full = b.const(f"{short}.restLen", "scalar", float(full_length))
    ratio = b.node(f"{short}.ratio", "Ratio")
    b.link(dist, ratio, "numerator")
    b.link(full, ratio, "denominator")
    blend = b.node(f"{short}.amount", "Blend", value_type="scalar")
    b.link(one, blend, "a")
    b.link(ratio, blend, "b")
    assert attr_wire is not None
    b.wire(attr_wire, blend, "weight")
    cond = b.node(f"{short}.active", "Condition", value_type="scalar")
    b.link(dist, cond, "x")
    b.link(full, cond, "threshold")
    b.link(blend, cond, "if_greater")
    b.link(one, cond, "else_value")
    return (cond, "value")


def _rest_pole(root: Vec3, mid: Vec3, end: Vec3, forward_sign: float) -> Vec3:
    """Default pole position: rest bend plane at half chain length, falling
    back to a character-forward/backward offset for straight chains."""
    half = 0.5 * (vdist(root, mid) + vdist(mid, end))
    pole = pole_point_from_chain(root, mid, end, half)
    if pole is None:
        pole = mid + Vec3(0.0, 0.0, forward_sign * half)
    return pole


def _two_bone_rest(
    b: PartBuild,
    short: str,
    root: Vec3,
    mid: Vec3,
    end: Vec3,
    pole: Vec3,
    orient_root: Quat,
    orient_mid: Quat,
    end_post: Quat,
) -> str:
    """TwoBoneIK node with rest-pose posts solved at compile time."""
    len_a = vdist(root, mid)
    len_b = vdist(mid, end)
    sol = solve_two_bone_ik(TwoBoneChain(root, len_a, len_b, pole), end)
    fb = (pole - mid)
    fb = fb.normalized() if fb.length() > 1e-9 else Vec3(0.0, 0.0, 1.0)
    return b.node(
        short,
        "TwoBoneIK",
        len_a=len_a,
        len_b=len_b,
        post_upper=q_mul(q_conjugate(sol.upper_rotation), orient_root),
        post_lower=q_mul(q_conjugate(sol.lower_rotation), orient_mid),
        post_effector=end_post,
        fallback_pole_dir=fb,
    )


def _fk_joint_chain(
    b: PartBuild,
    prefix: str,
    ctrl_names: Sequence[str],
    joints: Sequence[str],
    base: Wire,
    base_pos: Vec3,
    sk: Skeleton,
    ctrl_parent: str,
    order: str = "XYZ",
) -> List[Wire]:
    """FK controller chain plus per-joint aim-frame offsets."""
    frames: List[Wire] = []
    prev = base
    prev_pos = base_pos
    prev_ctrl = ctrl_parent
    for i, (cname, joint) in enumerate(zip(ctrl_names, joints)):
        pos = sk.rest_position(joint)
        b.control(cname, "r", "rotation", rotate_order=order, forward_axis="Z")
        fk = b.node(
            f"{prefix}fk{i + 1}",
            "ParentConstraint",
            offset=_offset_xf(pos - prev_pos),
            use_r=True,
        )
        b.wire(prev, fk, "target")
        b.link(f"{b.part}.ctl.{cname}.r", fk, "r")
        jf = b.node(
            f"{prefix}fk{i + 1}Joint",
            "ParentConstraint",
            offset=_rot_offset(sk.rest_orientation(joint)),
        )
        b.link(fk, jf, "target")
        if b.register_scene:
            b.scene_controller(cname, prev_ctrl, pos, "circle", "L")
        frames.append((jf, "value"))
        prev = (fk, "value")
        prev_pos = pos
        prev_ctrl = cname
    return frames


# ---------------------------------------------------------------------------
# Arm (canonical left side)
# ---------------------------------------------------------------------------


def build_arm_canonical(
    b: PartBuild,
    rig: Rig,
    options: RigBuildOptions,
    geo: Dict[str, Xform],
    chest_wire: Wire,
    chest_pos: Vec3,
) -> Dict[str, object]:
    """FK chain with orient switch, IK chain with pole/stretch/lock, twist.

    ``geo`` maps role names (clav, shoulder, elbow, wrist) to canonical-side
    rest transforms; joint names inside this builder are left-side.
    """
    sk = rig.skeleton
    rel_base = rig.exports["rel_base"]
    master = rig.exports["master"]
    clav, shoulder, elbow, wrist = (
        geo["clav"], geo["shoulder"], geo["elbow"], geo["wrist"],
    )
    clav_pos, shoulder_pos = clav.t, shoulder.t
    elbow_pos, wrist_pos = elbow.t, wrist.t
    len_a = vdist(shoulder_pos, elbow_pos)
    len_b = vdist(elbow_pos, wrist_pos)

    # clavicle (absent in bare-arm part rigs)
    if geo.get("clav_name"):
        b.control("L_clav_ctrl", "r", "rotation", rotate_order="YZX", forward_axis="Y")
        clav_fk = b.node(
            "clavCtrl", "ParentConstraint", offset=_offset_xf(clav_pos - chest_pos), use_r=True
        )
        b.wire(chest_wire, clav_fk, "target")
        b.link(f"{b.part}.ctl.L_clav_ctrl.r", clav_fk, "r")
        clav_joint = b.node("clavJnt", "ParentConstraint", offset=_rot_offset(clav.q))
        b.link(clav_fk, clav_joint, "target")
        b.joint_out(geo["clav_name"], master, (clav_joint, "value"))
        b.scene_controller("L_clav_ctrl", "C_chest_ctrl", clav_pos, "circle", "L")
        shoulder_parent: Wire = (clav_fk, "value")
        shoulder_parent_pos = clav_pos
    else:
        shoulder_parent = chest_wire
        shoulder_parent_pos = chest_pos

    shoulder_pos_pc = b.node(
        "shoulderPos",
        "PointConstraint",
        targets=1,
        offsets=(shoulder_pos - shoulder_parent_pos,),
    )
    b.wire(shoulder_parent, shoulder_pos_pc, "target0")

    # orient space switch: shoulder frame follows the spine or the body
    b.control("L_armIk_ctrl", "spineFollow", "scalar", default=1.0, soft=(0.0, 1.0))
    spine_orient = b.node(
        "spineOrient", "ParentConstraint", offset=_offset_xf(shoulder_pos - chest_pos)
    )
    b.wire(chest_wire, spine_orient, "target")
    body_orient = b.const("bodyOrient", "transform", _offset_xf(shoulder_pos))
    orient_switch = b.node(
        "orientSwitch",
        "OrientConstraint",
        targets=2,
        offsets=(QUAT_IDENTITY, QUAT_IDENTITY),
    )
    b.link(body_orient, orient_switch, "target0")
    b.link(spine_orient, orient_switch, "target1")
    b.link(f"{b.part}.ctl.L_armIk_ctrl.spineFollow", orient_switch, "weight")
    fk_space = b.node("fkSpace", "ParentConstraint", use_t=True, use_r=True)
    b.wire(rel_base, fk_space, "target")
    b.link(shoulder_pos_pc, fk_space, "t")
    b.link(orient_switch, fk_space, "r")

    fk_frames = _fk_joint_chain(
        b,
        "",
        ["L_armFk1_ctrl", "L_armFk2_ctrl", "L_armFk3_ctrl"],
        [geo["shoulder_name"], geo["elbow_name"], geo["wrist_name"]],
        (fk_space, "value"),
        shoulder_pos,
        sk,
        "L_clav_ctrl",
    )

    # IK controllers
    b.control("L_armIk_ctrl", "t", "vec3")
    b.control("L_armIk_ctrl", "r", "rotation", rotate_order="XYZ", forward_axis="Z")
    ik_ctrl = b.node(
        "ikCtrl", "ParentConstraint", offset=_offset_xf(wrist_pos), use_t=True, use_r=True
    )
    b.wire(rel_base, ik_ctrl, "target")
    b.link(f"{b.part}.ctl.L_armIk_ctrl.t", ik_ctrl, "t")
    b.link(f"{b.part}.ctl.L_armIk_ctrl.r", ik_ctrl, "r")
    pole_rest = _rest_pole(shoulder_pos, elbow_pos, wrist_pos, -1.0)
    b.control("L_armPole_ctrl", "t", "vec3")
    pole_ctrl = b.node(
        "poleCtrl", "ParentConstraint", offset=_offset_xf(pole_rest), use_t=True
    )
    b.wire(rel_base, pole_ctrl, "target")
    b.link(f"{b.part}.ctl.L_armPole_ctrl.t", pole_ctrl, "t")
    target_pos = b.node("targetPos", "PointConstraint", targets=1)
    b.link(ik_ctrl, target_pos, "target0")
    pole_pos = b.node("polePos", "PointConstraint", targets=1)
    b.link(pole_ctrl, pole_pos, "target0")
    ik_rot = b.node("ikRot", "OrientConstraint", targets=1, offsets=(QUAT_IDENTITY,))
    b.link(ik_ctrl, ik_rot, "target0")
    b.scene_controller("L_armIk_ctrl", "C_master_ctrl", wrist_pos, "arrow", "L")
    b.scene_controller("L_armPole_ctrl", "L_armIk_ctrl", pole_rest, "arrow", "L")

    stretch_attr: Optional[Wire] = None
    if options.stretch_limbs:
        b.control("L_armIk_ctrl", "stretch", "scalar", default=1.0, soft=(0.0, 1.0))
        stretch_attr = (f"{b.part}.ctl.L_armIk_ctrl.stretch", "value")
    stretch = _stretch_subgraph(
        b, "stretch", options.stretch_limbs,
        shoulder_pos_pc, target_pos, len_a + len_b, stretch_attr,
    )
    if options.limb_lock:
        b.control("L_armIk_ctrl", "lock", "scalar", default=0.0, soft=(0.0, 1.0))
        lock_wire: Wire = (f"{b.part}.ctl.L_armIk_ctrl.lock", "value")
    else:
        lock_wire = (b.const("lock0", "scalar", 0.0), "value")

    ik = _two_bone_rest(
        b, "ik", shoulder_pos, elbow_pos, wrist_pos, pole_rest,
        shoulder.q, elbow.q, wrist.q,
    )
    b.link(shoulder_pos_pc, ik, "root_pos")
    b.link(target_pos, ik, "target")
    b.link(pole_pos, ik, "pole")
    b.wire(stretch, ik, "stretch_scale")
    b.wire(lock_wire, ik, "lock_weight")
    b.link(pole_pos, ik, "lock_point")
    b.link(ik_rot, ik, "target_rot")
    b.control("L_armIk_ctrl", "upperRoll", "scalar", default=0.0, soft=(-180.0, 180.0))
    b.control("L_armIk_ctrl", "lowerRoll", "scalar", default=0.0, soft=(-180.0, 180.0))
    b.link(f"{b.part}.ctl.L_armIk_ctrl.upperRoll", ik, "roll_upper")
    b.link(f"{b.part}.ctl.L_armIk_ctrl.lowerRoll", ik, "roll_lower")

    # FK/IK blend per joint
    default_ik = 1.0 if options.default_mode == "ik" else 0.0
    b.control("L_armIk_ctrl", "fkIk", "scalar", default=default_ik, soft=(0.0, 1.0))
    blend_wire = (f"{b.part}.ctl.L_armIk_ctrl.fkIk", "value")
    blended: List[Wire] = []
    for i, (fk_frame, ik_port) in enumerate(
        zip(fk_frames, ("upper", "mid", "effector"))
    ):
        bl = b.node(f"blend{i}", "Blend", value_type="transform")
        b.wire(fk_frame, bl, "a")
        b.graph.connect(ik, ik_port, bl, "b")
        b.wire(blend_wire, bl, "weight")
        blended.append((bl, "value"))
    for joint, frame in zip(
        (geo["shoulder_name"], geo["elbow_name"], geo["wrist_name"]), blended
    ):
        b.joint_out(joint, master, frame)

    # forearm twist sub-chain
    twist_joints: List[str] = []
    if options.twist_joints > 0:
        b.control("L_armIk_ctrl", "twist", "scalar", default=0.0, soft=(-180.0, 180.0))
        n = options.twist_joints
        rel_rest = q_mul(q_conjugate(elbow.q), wrist.q)
        rest_twist = 2.0 * math.atan2(rel_rest[1], rel_rest[0])
        tw = b.node(
            "twist",
            "TwistDistributor",
            joints=n,
            posts=tuple([QUAT_IDENTITY] * n),
            twist_gain=1.0,
            rest_twist=rest_twist,
        )
        b.wire(blended[1], tw, "parent")
        b.wire(blended[2], tw, "child")
        b.link(f"{b.part}.ctl.L_armIk_ctrl.twist", tw, "extra")
        for k in range(n):
            jname = geo["twist_names"][k]
            twist_joints.append(jname)
            nid = b.node(f"out.{jname}", "JointOutput", joint=jname)
            b.wire(master, nid, "base")
            b.graph.connect(tw, f"joint{k}", nid, "local")

    meta = {
        "part": b.part,
        "type": "arm",
        "joints": [geo["shoulder_name"], geo["elbow_name"], geo["wrist_name"]],
        "fk_controls": ["L_armFk1_ctrl", "L_armFk2_ctrl", "L_armFk3_ctrl"],
        "ik_control": "L_armIk_ctrl",
        "pole_control": "L_armPole_ctrl",
        "blend_attr": "L_armIk_ctrl.fkIk",
        "stretch_attr": "L_armIk_ctrl.stretch" if options.stretch_limbs else None,
        "lock_attr": "L_armIk_ctrl.lock" if options.limb_lock else None,
        "lengths": [len_a, len_b],
        "rest": {
            "root": list(shoulder_pos),
            "mid": list(elbow_pos),
            "end": list(wrist_pos),
            "pole": list(pole_rest),
            "ik_ctrl_pos": list(wrist_pos),
            "pole_ctrl_pos": list(pole_rest),
        },
        "fk_orients": [list(shoulder.q), list(elbow.q), list(wrist.q)],
        "fk_rest_pos": [list(shoulder_pos), list(elbow_pos), list(wrist_pos)],
        "end_orient": list(wrist.q),
        "twist_joints": twist_joints,
        "ik_node": "ik",
        "ik_ctrl_node": "ikCtrl",
        "pole_ctrl_node": "poleCtrl",
        "fk_space_node": "fkSpace",
        "fk_joint_nodes": ["fk1Joint", "fk2Joint", "fk3Joint"],
    }
    exports = {"wrist": (f"{b.part}.blend2", "value")}
    return {"meta": meta, "exports": exports}


# ---------------------------------------------------------------------------
# Fingers (canonical left side)
# ---------------------------------------------------------------------------

FINGER_ORDER = ("thumb", "index", "middle", "ring", "pinky")

# driven-key curves shared per hand: attr -> (keys, interpolation)
FINGER_KEYS: Dict[str, Tuple[Tuple[Tuple[float, float], ...], str]] = {
    "curl": (((-100.0, -90.0), (0.0, 0.0), (100.0, 90.0)), "linear"),
    "thumbCurl": (((-100.0, -90.0), (0.0, 0.0), (100.0, 90.0)), "linear"),
    "scrunch": (((-100.0, -60.0), (0.0, 0.0), (100.0, 60.0)), "linear"),
    "thumbScrunch": (((-100.0, -60.0), (0.0, 0.0), (100.0, 60.0)), "linear"),
    "spread": (((-100.0, -30.0), (0.0, 0.0), (100.0, 30.0)), "linear"),
    "midSpread": (((-100.0, -30.0), (0.0, 0.0), (100.0, 30.0)), "linear"),
    "thumbSpread": (((-100.0, -30.0), (0.0, 0.0), (100.0, 30.0)), "linear"),
    "twist": (((-100.0, -60.0), (0.0, 0.0), (100.0, 60.0)), "linear"),
    "lean": (((-100.0, -45.0), (0.0, 0.0), (100.0, 45.0)), "linear"),
    "relax": (((-100.0, -60.0), (0.0, 0.0), (100.0, 60.0)), "smooth"),
    "cup": (((-100.0, -50.0), (0.0, 0.0), (100.0, 50.0)), "linear"),
}

# attr -> list of (finger, joint_index or None for all, axis, gain)
_CURL_JOINT_GAINS = (-0.9, -1.0, -0.7)
_SCRUNCH_JOINT_GAINS = (0.6, -1.0, -0.8)
_RELAX_FINGER = {"index": 0.35, "middle": 0.5, "ring": 0.7, "pinky": 0.9}
_RELAX_JOINT = (-0.5, -0.6, -0.45)
_SPREAD_BASE = {"index": -1.0, "middle": -0.2, "ring": 0.6, "pinky": 1.2}
_CUP_BASE = {"thumb": -0.5, "index": 0.15, "ring": -0.45, "pinky": -0.9}


def finger_channel_table(finger: str, joint_idx: int) -> List[Tuple[str, str, float]]:
    """Channels (attr, axis, gain) driving one finger joint."""
    out: List[Tuple[str, str, float]] = []
    if finger == "thumb":
        out.append(("thumbCurl", "Z", _CURL_JOINT_GAINS[joint_idx] * 0.8))
        out.append(("thumbScrunch", "Z", _SCRUNCH_JOINT_GAINS[joint_idx]))
        if joint_idx == 0:
            out.append(("thumbSpread", "Y", -1.0))
    else:
        out.append(("curl", "Z", _CURL_JOINT_GAINS[joint_idx]))
        out.append(("scrunch", "Z", _SCRUNCH_JOINT_GAINS[joint_idx]))
        out.append(("relax", "Z", _RELAX_FINGER[finger] * _RELAX_JOINT[joint_idx]))
        if joint_idx == 0:
            out.append(("spread", "Y", _SPREAD_BASE[finger]))
            if finger == "middle":
                out.append(("midSpread", "Y", -1.0))
    if joint_idx == 0:
        out.append(("twist", "X", 1.0))
        out.append(("lean", "Y", 0.5))
        if finger in _CUP_BASE:
            out.append(("cup", "Z", _CUP_BASE[finger]))
    return out


def build_fingers_canonical(
    b: PartBuild,
    rig: Rig,
    options: RigBuildOptions,
    fingers: Dict[str, List[str]],
    wrist_wire: Wire,
    wrist_rest: Xform,
) -> Dict[str, object]:
    """Hand attribute set feeding shared driven keys into finger joints."""
    sk = rig.skeleton
    master = rig.exports["master"]
    hand = "L_hand_ctrl"
    wrist_inv_q = q_conjugate(wrist_rest.q)

    dk_wires: Dict[str, Wire] = {}
    if options.finger_attrs:
        for attr, (keys, interp) in FINGER_KEYS.items():
            b.control(hand, attr, "scalar", default=0.0, soft=(-180.0, 180.0))
            dk = b.node(
                f"dk.{attr}", "DrivenKeyCurve", curve=DrivenKey(keys, interp)
            )
            b.link(f"{b.part}.ctl.{hand}.{attr}", dk, "driver")
            dk_wires[attr] = (dk, "value")
    b.scene_controller(hand, "L_armFk3_ctrl", wrist_rest.t, "box", "L")

    for finger, joints in fingers.items():
        parent_wire = wrist_wire
        parent_rest = wrist_rest
        prev_ctrl = hand
        for j_idx, joint in enumerate(joints):
            rest = Xform(sk.rest_position(joint), sk.rest_orientation(joint), ONE3)
            # rest offset expressed in the parent joint frame
            dt = rest.t - parent_rest.t
            local_t = q_rotate(q_conjugate(parent_rest.q), dt)
            local_q = q_mul(q_conjugate(parent_rest.q), rest.q)
            ctrl = f"L_{finger}{j_idx + 1}_ctrl"
            b.control(
                ctrl, "r", "rotation", rotate_order="XYZ", forward_axis="Z",
                forward_world_axis=Vec3(*q_rotate(rest.q, (0.0, 0.0, 1.0))),
            )
            channels = []
            if options.finger_attrs:
                channels = [
                    (f"{attr}_in", axis, gain)
                    for attr, axis, gain in finger_channel_table(finger, j_idx)
                ]
            pc = b.node(
                f"{finger}{j_idx + 1}",
                "ParentConstraint",
                offset=Xform(Vec3(*local_t), Quat(*local_q), ONE3),
                use_r=True,
                channels=tuple(channels),
                rotate_order="XYZ",
            )
            b.wire(parent_wire, pc, "target")
            b.link(f"{b.part}.ctl.{ctrl}.r", pc, "r")
            for attr, _axis, _gain in (
                finger_channel_table(finger, j_idx) if options.finger_attrs else ()
            ):
                b.wire(dk_wires[attr], pc, f"{attr}_in")
            b.joint_out(joint, master, (pc, "value"))
            b.scene_controller(ctrl, prev_ctrl, rest.t, "circle", "L")
            parent_wire = (pc, "value")
            parent_rest = rest
            prev_ctrl = ctrl

    meta = {
        "part": b.part,
        "type": "fingers",
        "hand_control": hand,
        "attrs": list(FINGER_KEYS) if options.finger_attrs else [],
        "fingers": fingers,
    }
    return {"meta": meta, "exports": {}}


# ---------------------------------------------------------------------------
# Leg (canonical left side)
# ---------------------------------------------------------------------------


def build_leg_canonical(
    b: PartBuild,
    rig: Rig,
    options: RigBuildOptions,
    geo: Dict[str, object],
    attach_wire: Wire,
    attach_pos: Vec3,
    quadruped: bool,
) -> Dict[str, object]:
    """IK leg with nested foot pivot groups, FK alternative, stretch/lock."""
    sk = rig.skeleton
    rel_base = rig.exports["rel_base"]
    master = rig.exports["master"]
    names: List[str] = geo["joints"]  # type: ignore[assignment]
    prefix: str = geo["prefix"]  # type: ignore[assignment]
    rest = {n: Xform(sk.rest_position(n), sk.rest_orientation(n), ONE3) for n in names}

    scap_wire: Optional[Wire] = None
    if quadruped:
        scap_name = names[0]
        upper_name, lower_name, ankle_name, toe_name = names[1:]
        scap = rest[scap_name]
        ctrl = f"L_{prefix}Scap_ctrl"
        b.control(ctrl, "r", "rotation", rotate_order="YZX", forward_axis="Y")
        scap_fk = b.node(
            "scapCtrl",
            "ParentConstraint",
            offset=_offset_xf(scap.t - attach_pos),
            use_r=True,
        )
        b.wire(attach_wire, scap_fk, "target")
        b.link(f"{b.part}.ctl.{ctrl}.r", scap_fk, "r")
        scap_joint = b.node("scapJnt", "ParentConstraint", offset=_rot_offset(scap.q))
        b.link(scap_fk, scap_joint, "target")
        b.joint_out(scap_name, master, (scap_joint, "value"))
        b.scene_controller(ctrl, "C_chest_ctrl", scap.t, "circle", "L")
        scap_wire = (scap_fk, "value")
        base_wire: Wire = scap_wire
        base_pos = scap.t
        ball_name = ankle_name  # quadruped ankle doubles as the ball
    else:
        upper_name, lower_name, ankle_name, ball_name, toe_name = names
        base_wire = attach_wire
        base_pos = attach_pos

    upper, lower, ankle = rest[upper_name], rest[lower_name], rest[ankle_name]
    toe = rest[toe_name]
    ball = rest[ball_name]
    len_a = vdist(upper.t, lower.t)
    len_b = vdist(lower.t, ankle.t)

    leg_root = b.node(
        "legRoot", "PointConstraint", targets=1, offsets=(upper.t - base_pos,)
    )
    b.wire(base_wire, leg_root, "target0")

    # foot controller and attributes
    foot = f"L_{prefix}Ik_ctrl"
    b.control(foot, "t", "vec3")
    b.control(foot, "r", "rotation", rotate_order="XZY", forward_axis="X")
    for attr in ("footRoll", "toeLift", "ballLift", "ankleRoll"):
        b.control(foot, attr, "scalar", default=0.0, soft=(-180.0, 180.0))
    foot_ctrl = b.node(
        "footCtrl", "ParentConstraint", offset=_offset_xf(ankle.t), use_t=True, use_r=True
    )
    b.wire(rel_base, foot_ctrl, "target")
    b.link(f"{b.part}.ctl.{foot}.t", foot_ctrl, "t")
    b.link(f"{b.part}.ctl.{foot}.r", foot_ctrl, "r")
    b.scene_controller(foot, "C_master_ctrl", ankle.t, "arrow", "L")

    # nested pivot groups (reverse-foot)
    if quadruped:
        ga_pivot = toe.t - ankle.t
        gc_pivot = None
    else:
        ga_pivot = ball.t - ankle.t
        gc_pivot = ball.t - ankle.t
    ga = b.node(
        "rollGrp", "ParentConstraint",
        channels=(("roll_in", "X", 1.0),), pivot=ga_pivot, rotate_order="XYZ",
    )
    b.wire((foot_ctrl, "value"), ga, "target")
    b.link(f"{b.part}.ctl.{foot}.footRoll", ga, "roll_in")
    gb = b.node(
        "ankleGrp", "ParentConstraint",
        channels=(("ball_in", "X", 1.0), ("ankle_in", "Z", 1.0)), rotate_order="XYZ",
    )
    b.wire((foot_ctrl, "value"), gb, "target")
    b.link(f"{b.part}.ctl.{foot}.ballLift", gb, "ball_in")
    b.link(f"{b.part}.ctl.{foot}.ankleRoll", gb, "ankle_in")
    gc = b.node(
        "toeGrp", "ParentConstraint",
        channels=(("toelift_in", "X", 1.0),),
        pivot=gc_pivot, rotate_order="XYZ",
    )
    b.link(gb, gc, "target")
    b.link(f"{b.part}.ctl.{foot}.toeLift", gc, "toelift_in")

    p_ankle = b.node("handleAnkle", "PointConstraint", targets=1)
    b.link(ga, p_ankle, "target0")
    p_toe = b.node(
        "handleToe", "PointConstraint", targets=1, offsets=(toe.t - ankle.t,)
    )
    b.link(gc, p_toe, "target0")
    if not quadruped:
        p_ball = b.node(
            "handleBall", "PointConstraint", targets=1, offsets=(ball.t - ankle.t,)
        )
        b.link(gb, p_ball, "target0")

    # knee pole
    pole_rest = _rest_pole(upper.t, lower.t, ankle.t, 1.0)
    pole_name = f"L_{prefix}Pole_ctrl"
    b.control(pole_name, "t", "vec3")
    pole_ctrl = b.node(
        "poleCtrl", "ParentConstraint", offset=_offset_xf(pole_rest), use_t=True
    )
    b.wire(rel_base, pole_ctrl, "target")
    b.link(f"{b.part}.ctl.{pole_name}.t", pole_ctrl, "t")
    pole_pos = b.node("polePos", "PointConstraint", targets=1)
    b.link(pole_ctrl, pole_pos, "target0")
    b.scene_controller(pole_name, foot, pole_rest, "arrow", "L")

    stretch_attr: Optional[Wire] = None
    if options.stretch_limbs:
        b.control(foot, "stretch", "scalar", default=1.0, soft=(0.0, 1.0))
        stretch_attr = (f"{b.part}.ctl.{foot}.stretch", "value")
    stretch = _stretch_subgraph(
        b, "stretch", options.stretch_limbs, leg_root, p_ankle, len_a + len_b, stretch_attr
    )
    if options.limb_lock:
        b.control(foot, "lock", "scalar", default=0.0, soft=(0.0, 1.0))
        lock_wire: Wire = (f"{b.part}.ctl.{foot}.lock", "value")
    else:
        lock_wire = (b.const("lock0", "scalar", 0.0), "value")

    # ankle orientation: aim at the next handle, rolled by the foot groups
    aim_ref = gb
    aim_at = p_toe if quadruped else p_ball
    ankle_frame_rest = _aim_quat(
        ankle.t, (toe.t if quadruped else ball.t), (0.0, 0.0, 1.0), QUAT_IDENTITY, False
    )
    ankle_aim = b.node(
        "ankleAim",
        "OrientConstraint",
        mode="aim",
        up_axis=Vec3(0.0, 0.0, 1.0),
        post=q_mul(q_conjugate(ankle_frame_rest), ankle.q),
    )
    b.link(p_ankle, ankle_aim, "eye")
    b.link(aim_at, ankle_aim, "at")
    b.link(aim_ref, ankle_aim, "up_ref")

    ik = _two_bone_rest(
        b, "ik", upper.t, lower.t, ankle.t, pole_rest, upper.q, lower.q, QUAT_IDENTITY
    )
    b.link(leg_root, ik, "root_pos")
    b.link(p_ankle, ik, "target")
    b.link(pole_pos, ik, "pole")
    b.wire(stretch, ik, "stretch_scale")
    b.wire(lock_wire, ik, "lock_weight")
    b.link(pole_pos, ik, "lock_point")
    b.link(ankle_aim, ik, "target_rot")
    b.control(foot, "upperRoll", "scalar", default=0.0, soft=(-180.0, 180.0))
    b.control(foot, "lowerRoll", "scalar", default=0.0, soft=(-180.0, 180.0))
    b.link(f"{b.part}.ctl.{foot}.upperRoll", ik, "roll_upper")
    b.link(f"{b.part}.ctl.{foot}.lowerRoll", ik, "roll_lower")

    ankle_ik_wire: Wire = (ik, "effector")

    # ball and toe pinned to their handles
    if quadruped:
        toe_rot = b.node(
            "toeRot", "OrientConstraint", targets=1,
            offsets=(q_mul(q_conjugate(ankle.q), toe.q),),
        )
        b.graph.connect(ik, "effector", toe_rot, "target0")
        toe_ik = b.node("toeIkFrame", "ParentConstraint", use_t=True, use_r=True)
        b.wire(rel_base, toe_ik, "target")
        b.link(p_toe, toe_ik, "t")
        b.link(toe_rot, toe_ik, "r")
        ball_ik_wire = None
        toe_ik_wire: Wire = (toe_ik, "value")
    else:
        ball_frame_rest = _aim_quat(ball.t, toe.t, (0.0, 0.0, 1.0), QUAT_IDENTITY, False)
        ball_aim = b.node(
            "ballAim",
            "OrientConstraint",
            mode="aim",
            up_axis=Vec3(0.0, 0.0, 1.0),
            post=q_mul(q_conjugate(ball_frame_rest), ball.q),
        )
        b.link(p_ball, ball_aim, "eye")
        b.link(p_toe, ball_aim, "at")
        b.link(gc, ball_aim, "up_ref")
        ball_ik = b.node("ballIkFrame", "ParentConstraint", use_t=True, use_r=True)
        b.wire(rel_base, ball_ik, "target")
        b.link(p_ball, ball_ik, "t")
        b.link(ball_aim, ball_ik, "r")
        toe_rot = b.node(
            "toeRot", "OrientConstraint", targets=1,
            offsets=(q_mul(q_conjugate(ball.q), toe.q),),
        )
        b.link(ball_ik, toe_rot, "target0")
        toe_ik = b.node("toeIkFrame", "ParentConstraint", use_t=True, use_r=True)
        b.wire(rel_base, toe_ik, "target")
        b.link(p_toe, toe_ik, "t")
        b.link(toe_rot, toe_ik, "r")
        ball_ik_wire = (ball_ik, "value")
        toe_ik_wire = (toe_ik, "value")

    # FK alternative chain
    fk_space = b.node(
        "fkSpace", "ParentConstraint", offset=_offset_xf(upper.t - base_pos)
    )
    b.wire(base_wire, fk_space, "target")
    fk_frames = _fk_joint_chain(
        b,
        "",
        [f"L_{prefix}Fk1_ctrl", f"L_{prefix}Fk2_ctrl", f"L_{prefix}Fk3_ctrl"],
        [upper_name, lower_name, ankle_name],
        (fk_space, "value"),
        upper.t,
        sk,
        f"L_{prefix}Scap_ctrl" if quadruped else "C_hip_ctrl",
    )
    ball_fk = b.node(
        "ballFk", "ParentConstraint",
        offset=Xform(
            Vec3(*q_rotate(q_conjugate(ankle.q), ball.t - ankle.t)),
            q_mul(q_conjugate(ankle.q), ball.q),
            ONE3,
        ),
    )
    b.wire(fk_frames[2], ball_fk, "target")
    toe_fk = b.node(
        "toeFk", "ParentConstraint",
        offset=Xform(
            Vec3(*q_rotate(q_conjugate(ball.q), toe.t - ball.t)),
            q_mul(q_conjugate(ball.q), toe.q),
            ONE3,
        ),
    )
    b.link(ball_fk, toe_fk, "target")

    default_ik = 1.0 if options.default_mode == "ik" else 0.0
    b.control(foot, "fkIk", "scalar", default=default_ik, soft=(0.0, 1.0))
    blend_wire = (f"{b.part}.ctl.{foot}.fkIk", "value")

    pairs: List[Tuple[str, Wire, Wire]] = [
        (upper_name, fk_frames[0], (ik, "upper")),
        (lower_name, fk_frames[1], (ik, "mid")),
        (ankle_name, fk_frames[2], ankle_ik_wire),
    ]
    if not quadruped:
        pairs.append((ball_name, (ball_fk, "value"), ball_ik_wire))  # type: ignore[arg-type]
    pairs.append((toe_name, (toe_fk, "value"), toe_ik_wire))
    for i, (joint, fk_w, ik_w) in enumerate(pairs):
        bl = b.node(f"blend{i}", "Blend", value_type="transform")
        b.wire(fk_w, bl, "a")
        b.wire(ik_w, bl, "b")
        b.wire(blend_wire, bl, "weight")
        b.joint_out(joint, master, (bl, "value"))

    meta = {
        "part": b.part,
        "type": "leg",
        "quadruped": quadruped,
        "joints": [upper_name, lower_name, ankle_name],
        "fk_controls": [f"L_{prefix}Fk1_ctrl", f"L_{prefix}Fk2_ctrl", f"L_{prefix}Fk3_ctrl"],
        "ik_control": foot,
        "pole_control": pole_name,
        "blend_attr": f"{foot}.fkIk",
        "stretch_attr": f"{foot}.stretch" if options.stretch_limbs else None,
        "lock_attr": f"{foot}.lock" if options.limb_lock else None,
        "lengths": [len_a, len_b],
        "rest": {
            "root": list(upper.t),
            "mid": list(lower.t),
            "end": list(ankle.t),
            "pole": list(pole_rest),
            "ik_ctrl_pos": list(ankle.t),
            "pole_ctrl_pos": list(pole_rest),
        },
        "fk_orients": [list(upper.q), list(lower.q), list(ankle.q)],
        "fk_rest_pos": [list(upper.t), list(lower.t), list(ankle.t)],
        "end_orient": list(ankle.q),
        "twist_joints": [],
        "ik_node": "ik",
        "ik_ctrl_node": "footCtrl",
        "pole_ctrl_node": "poleCtrl",
        "fk_space_node": "fkSpace",
        "fk_joint_nodes": ["fk1Joint", "fk2Joint", "fk3Joint"],
    }
    return {"meta": meta, "exports": {}}


# ---------------------------------------------------------------------------
# Tail
# ---------------------------------------------------------------------------


def build_tail(rig: Rig, options: RigBuildOptions) -> PartBuild:
    """Simple FK chain hanging off the hip controller."""
    b = PartBuild(rig, "tail")
    sk = rig.skeleton
    joints = _require_part(sk, "tail")
    master = rig.exports["master"]
    if "hipCtrl" in rig.exports:
        prev: Wire = rig.exports["hipCtrl"]
        prev_pos = rig.export_rest_pos["hipCtrl"]
    else:
        const = b.const("attachHip", "transform", _offset_xf(sk.rest_position(joints[0])))
        prev = (const, "value")
        prev_pos = sk.rest_position(joints[0])
    prev_ctrl = "C_hip_ctrl"
    for i, joint in enumerate(joints, start=1):
        pos = sk.rest_position(joint)
        cname = f"C_tailFk{i}_ctrl"
        b.control(cname, "r", "rotation", rotate_order="ZXY", forward_axis="X")
        fk = b.node(
            f"fk{i}", "ParentConstraint", offset=_offset_xf(pos - prev_pos), use_r=True
        )
        b.wire(prev, fk, "target")
        b.link(f"tail.ctl.{cname}.r", fk, "r")
        jf = b.node(
            f"fk{i}Joint", "ParentConstraint", offset=_rot_offset(sk.rest_orientation(joint))
        )
        b.link(fk, jf, "target")
        b.joint_out(joint, master, (jf, "value"))
        b.scene_controller(cname, prev_ctrl, pos, "circle", "C")
        prev = (fk, "value")
        prev_pos = pos
        prev_ctrl = cname
    return b
