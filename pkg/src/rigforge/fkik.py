"""Seamless FK/IK switching: derive one chain's control values from the
other so the joints do not move when the mode flips.

Both directions are closed form: the IK side copies the FK wrist/ankle
world transform onto the IK controller and drops the pole into the bend
plane (or onto the elbow when locking); the FK side reads its rotations
straight off the solved IK frames.
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple

from .errors import DegeneratePoleError, UnreachablePoseError, ZeroLengthTargetError
from .graph import ControlPose, EvalSession
from .math3d import (
    Quat,
    Vec3,
    Xform,
    q_conjugate,
    q_mul,
    quat_to_euler,
    vdist,
    xf_inv,
    xf_mul,
)
from .solvers import TwoBoneChain, pole_point_from_chain, solve_two_bone_ik

_POSITION_TOL = 1e-6


def _limb_meta(rig, limb: str) -> dict:
    meta = rig.limbs.get(limb)
    if meta is None or not meta.get("blend_attr"):
        raise UnreachablePoseError(f"no limb {limb!r} with both chains")
    return meta


def _relative_worlds(session: EvalSession, rig, meta, pose) -> Dict[str, Xform]:
    worlds = session.evaluate(pose)
    master = session.value_of("root.master")
    inv = xf_inv(master)
    return {j: xf_mul(inv, worlds[j]) for j in meta["joints"]}


def _control_euler(rig, control_attr: str, q: Quat):
    node = rig.graph.control_map()[control_attr]
    order = node.params.get("rotate_order", "XYZ")
    e = quat_to_euler(q, order)
    return (e.x, e.y, e.z)


def match_ik_to_fk(rig, limb: str, pose: Optional[ControlPose] = None,
                   session: Optional[EvalSession] = None) -> ControlPose:
    """IK control values reproducing the limb's current FK pose.

    Returns a new pose with the IK/pole controllers placed, the blend set
    to IK, and every other control untouched.
    """
    meta = _limb_meta(rig, limb)
    pose = ControlPose(pose or {})
    session = session or rig.session()
    part = meta["part"]

    fk_pose = ControlPose(pose)
    fk_pose[meta["blend_attr"]] = 0.0
    rel = _relative_worlds(session, rig, meta, fk_pose)
    j_root, j_mid, j_end = meta["joints"]
    root_p, mid_p, end_p = rel[j_root].t, rel[j_mid].t, rel[j_end].t

    len_a, len_b = meta["lengths"]
    reach = vdist(root_p, end_p)
    stretch_on = bool(meta.get("stretch_attr")) and pose.get(meta["stretch_attr"], 1.0) > 0.0
    if reach > len_a + len_b + 1e-7 and not stretch_on:
        raise UnreachablePoseError(
            f"{limb}: pose reach {reach:.6g} exceeds chain length {len_a + len_b:.6g}"
        )

    # the IK controller's rotation acts in front of the limb's rest end
    # orientation, for arms via the solver's effector post, for legs via the
    # equivariant foot aim; either way the rest end orientation divides out
    end_rest_q = Quat(*meta["end_orient"])
    ctrl_rest = rig.graph.nodes[f"{part}.{meta['ik_ctrl_node']}"].params["offset"].t
    pole_rest = rig.graph.nodes[f"{part}.{meta['pole_ctrl_node']}"].params["offset"].t

    out = ControlPose(pose)
    ik_ctrl = meta["ik_control"]
    t_needed = end_p - Vec3(*ctrl_rest)
    out[f"{ik_ctrl}.t"] = (t_needed.x, t_needed.y, t_needed.z)
    r_needed = q_mul(rel[j_end].q, q_conjugate(end_rest_q))
    out[f"{ik_ctrl}.r"] = _control_euler(rig, f"{ik_ctrl}.r", r_needed)

    lock_active = bool(meta.get("lock_attr")) and pose.get(meta["lock_attr"], 0.0) > 0.0
    if lock_active:
        pole_point: Optional[Vec3] = Vec3(*mid_p)
    else:
        pole_point = pole_point_from_chain(
            root_p, mid_p, end_p, 0.5 * (len_a + len_b)
        )
    if pole_point is not None:
        dp = pole_point - Vec3(*pole_rest)
        out[f"{meta['pole_control']}.t"] = (dp.x, dp.y, dp.z)
        pole_used = pole_point
    else:
        cur = pose.get(f"{meta['pole_control']}.t", (0.0, 0.0, 0.0))
        pole_used = Vec3(*pole_rest) + Vec3(*cur)

    # per-bone rolls: whatever twist the FK pose carries about each bone
    # beyond the solver's plane frame goes into the roll channels
    ik_node = rig.graph.nodes[f"{part}.{meta['ik_node']}"]
    post_u = Quat(*ik_node.params.get("post_upper", (1.0, 0.0, 0.0, 0.0)))
    post_l = Quat(*ik_node.params.get("post_lower", (1.0, 0.0, 0.0, 0.0)))
    gain = float(ik_node.params.get("roll_gain", 1.0))
    try:
        chain = TwoBoneChain(Vec3(*root_p), len_a, len_b, pole_used)
        sol = solve_two_bone_ik(chain, Vec3(*end_p))
        out[f"{ik_ctrl}.upperRoll"] = gain * _roll_about_x(
            sol.upper_rotation, rel[j_root].q, post_u
        )
        out[f"{ik_ctrl}.lowerRoll"] = gain * _roll_about_x(
            sol.lower_rotation, rel[j_mid].q, post_l
        )
    except (DegeneratePoleError, ZeroLengthTargetError):
        pass  # straight or degenerate chains: any roll is as good as another
    out[meta["blend_attr"]] = 1.0
    return out


def _roll_about_x(frame: Quat, joint_q: Quat, post: Quat) -> float:
    """Degrees of X-roll r with joint = frame * Rx(r) * post."""
    rel = q_mul(q_conjugate(frame), q_mul(joint_q, q_conjugate(post)))
    import math

    return math.degrees(2.0 * math.atan2(rel[1], rel[0]))


def match_fk_to_ik(rig, limb: str, pose: Optional[ControlPose] = None,
                   session: Optional[EvalSession] = None) -> ControlPose:
    """FK rotations reproducing the limb's current IK pose."""
    meta = _limb_meta(rig, limb)
    pose = ControlPose(pose or {})
    session = session or rig.session()
    part = meta["part"]

    ik_pose = ControlPose(pose)
    ik_pose[meta["blend_attr"]] = 1.0
    rel = _relative_worlds(session, rig, meta, ik_pose)
    j_root, j_mid, j_end = meta["joints"]

    # the FK chain is rigid; a stretched or locked IK pose has no FK match
    len_a, len_b = meta["lengths"]
    got_a = vdist(rel[j_root].t, rel[j_mid].t)
    got_b = vdist(rel[j_mid].t, rel[j_end].t)
    if abs(got_a - len_a) > _POSITION_TOL or abs(got_b - len_b) > _POSITION_TOL:
        raise UnreachablePoseError(
            f"{limb}: IK pose stretches segments "
            f"({got_a:.6g}/{len_a:.6g}, {got_b:.6g}/{len_b:.6g}); rigid FK cannot match"
        )

    g = rig.graph
    fk_space_q = session.value_of(f"{part}.{meta['fk_space_node']}").q
    orient_posts = [
        g.nodes[f"{part}.{short}"].params["offset"].q
        for short in meta["fk_joint_nodes"]
    ]
    out = ControlPose(pose)
    prev_frame_q = fk_space_q
    for i, (joint, ctrl) in enumerate(zip(meta["joints"], meta["fk_controls"])):
        frame_needed = q_mul(rel[joint].q, q_conjugate(orient_posts[i]))
        r_local = q_mul(q_conjugate(prev_frame_q), frame_needed)
        out[f"{ctrl}.r"] = _control_euler(rig, f"{ctrl}.r", r_local)
        prev_frame_q = frame_needed
    out[meta["blend_attr"]] = 0.0
    return out


def switch_mode(rig, limb: str, mode: str, pose: Optional[ControlPose] = None,
                session: Optional[EvalSession] = None) -> ControlPose:
    """Pose after switching the limb to ``mode`` with seamless matching."""
    if mode == "ik":
        return match_ik_to_fk(rig, limb, pose, session)
    if mode == "fk":
        return match_fk_to_ik(rig, limb, pose, session)
    raise UnreachablePoseError(f"unknown mode {mode!r}")
