import random

import pytest

from rigforge.compiler import assemble_character
from rigforge.errors import UnreachablePoseError
from rigforge.fkik import match_fk_to_ik, match_ik_to_fk, switch_mode
from rigforge.graph import ControlPose
from rigforge.widgets import create_template


@pytest.fixture(scope="module")
def rig():
    return assemble_character(create_template("biped"))


@pytest.fixture(scope="module")
def session(rig):
    return rig.session()


def world_delta(w1, w2, joints):
    worst = 0.0
    for j in joints:
        a, b = w1[j], w2[j]
        worst = max(worst, max(abs(x - y) for x, y in zip(a.t, b.t)))
        dq = min(
            sum((x - y) ** 2 for x, y in zip(a.q, b.q)),
            sum((x + y) ** 2 for x, y in zip(a.q, b.q)),
        ) ** 0.5
        worst = max(worst, dq)
    return worst


def random_fk_pose(rig, limb, rng, lo=-60, hi=60):
    meta = rig.limbs[limb]
    pose = ControlPose({meta["blend_attr"]: 0.0})
    for ctrl in meta["fk_controls"]:
        pose[f"{ctrl}.r"] = (
            rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)
        )
    return pose


def test_rest_pose_matches_both_ways(rig, session):
    for limb in ("armL", "armR", "legL", "legR"):
        meta = rig.limbs[limb]
        rest = session.evaluate(ControlPose({meta["blend_attr"]: 0.0}))
        to_ik = match_ik_to_fk(rig, limb, ControlPose(), session)
        after = session.evaluate(to_ik)
        assert world_delta(rest, after, meta["joints"]) <= 1e-6
        # the derived control values are (numerically) the defaults
        assert abs(to_ik[f"{meta['ik_control']}.t"][0]) < 1e-9
        back = match_fk_to_ik(rig, limb, to_ik, session)
        for ctrl in meta["fk_controls"]:
            assert max(abs(v) for v in back[f"{ctrl}.r"]) < 1e-6


def test_random_fk_to_ik_matches(rig, session):
    rng = random.Random(5)
    for _ in range(100):
        limb = rng.choice([k for k, m in rig.limbs.items() if m.get("blend_attr")])
        meta = rig.limbs[limb]
        pose = random_fk_pose(rig, limb, rng)
        before = session.evaluate(pose)
        matched = match_ik_to_fk(rig, limb, pose, session)
        assert matched[meta["blend_attr"]] == 1.0
        after = session.evaluate(matched)
        assert world_delta(before, after, meta["joints"]) <= 1e-6


def test_random_ik_to_fk_matches(rig, session):
    rng = random.Random(6)
    for _ in range(100):
        limb = rng.choice([k for k, m in rig.limbs.items() if m.get("blend_attr")])
        meta = rig.limbs[limb]
        pose = ControlPose({meta["blend_attr"]: 1.0})
        # rigid FK cannot reproduce stretched segments, so pose without it
        pose[meta["stretch_attr"]] = 0.0
        pose[f"{meta['ik_control']}.t"] = (
            rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)
        )
        pose[f"{meta['ik_control']}.r"] = (
            rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(-40, 40)
        )
        pose[f"{meta['pole_control']}.t"] = (
            rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-8, 8)
        )
        before = session.evaluate(pose)
        matched = match_fk_to_ik(rig, limb, pose, session)
        assert matched[meta["blend_attr"]] == 0.0
        after = session.evaluate(matched)
        assert world_delta(before, after, meta["joints"]) <= 1e-6


def test_round_trip(rig, session):
    rng = random.Random(7)
    for _ in range(50):
        limb = rng.choice([k for k, m in rig.limbs.items() if m.get("blend_attr")])
        meta = rig.limbs[limb]
        pose = random_fk_pose(rig, limb, rng)
        w0 = session.evaluate(pose)
        ik_pose = match_ik_to_fk(rig, limb, pose, session)
        fk_pose = match_fk_to_ik(rig, limb, ik_pose, session)
        w2 = session.evaluate(fk_pose)
        assert world_delta(w0, w2, meta["joints"]) <= 1e-6


def test_straight_arm_matches_with_any_pole(rig, session):
    meta = rig.limbs["armL"]
    pose = ControlPose({meta["blend_attr"]: 0.0})  # rest pose is near-straight
    before = session.evaluate(pose)
    matched = match_ik_to_fk(rig, limb := "armL", pose, session)
    after = session.evaluate(matched)
    assert world_delta(before, after, meta["joints"]) <= 1e-6


def test_stretched_ik_pose_rejected_for_fk(rig, session):
    meta = rig.limbs["armL"]
    len_a, len_b = meta["lengths"]
    pose = ControlPose(
        {
            meta["blend_attr"]: 1.0,
            f"{meta['ik_control']}.stretch": 1.0,
            # pull the wrist well past full reach
            f"{meta['ik_control']}.t": (1.2 * (len_a + len_b), 0.0, 0.0),
        }
    )
    with pytest.raises(UnreachablePoseError):
        match_fk_to_ik(rig, "armL", pose, session)


def test_matching_with_elbow_lock(rig, session):
    rng = random.Random(9)
    meta = rig.limbs["armL"]
    pose = random_fk_pose(rig, "armL", rng, -40, 40)
    pose[meta["lock_attr"]] = 1.0
    before = session.evaluate(pose)
    matched = match_ik_to_fk(rig, "armL", pose, session)
    after = session.evaluate(matched)
    assert world_delta(before, after, meta["joints"]) <= 1e-6


def test_switch_mode_api(rig, session):
    rng = random.Random(11)
    pose = random_fk_pose(rig, "legR", rng)
    before = session.evaluate(pose)
    switched = switch_mode(rig, "legR", "ik", pose, session)
    after = session.evaluate(switched)
    assert world_delta(before, after, rig.limbs["legR"]["joints"]) <= 1e-6
    with pytest.raises(UnreachablePoseError):
        switch_mode(rig, "legR", "bogus", pose, session)
    with pytest.raises(UnreachablePoseError):
        switch_mode(rig, "tailZ", "ik", pose, session)
