import random

import pytest
from fastapi.testclient import TestClient

from rigforge.compiler import assemble_character
from rigforge.service import create_app
from rigforge.widgets import create_template


@pytest.fixture(scope="module")
def app():
    return create_app(assemble_character(create_template("biped")))


@pytest.fixture()
def ws(app):
    client = TestClient(app)
    with client.websocket_connect("/ws") as sock:
        yield sock


def drain_initial(sock):
    desc = sock.receive_json()
    assert desc["type"] == "rig_description"
    first = sock.receive_json()
    assert first["type"] == "pose_update"
    return desc, first


def test_rig_description_contents(ws):
    desc, first = drain_initial(ws)
    assert desc["kind"] == "biped"
    assert len(desc["skeleton"]["joints"]) == 64
    names = {c["name"] for c in desc["controls"]}
    assert "L_armIk_ctrl.t" in names and "L_hand_ctrl.curl" in names
    assert {l["name"] for l in desc["limbs"]} == {"armL", "armR", "legL", "legR"}
    assert first["revision"] == 0
    assert len(first["joints"]) == 64


def test_set_control_updates_pose_and_revision(ws):
    desc, first = drain_initial(ws)
    ws.send_json({"type": "set_control", "name": "L_hand_ctrl.curl", "value": 100.0})
    update = ws.receive_json()
    assert update["type"] == "pose_update"
    assert update["revision"] == first["revision"] + 1
    tip_before = first["joints"]["L_index3_jnt"]
    tip_after = update["joints"]["L_index3_jnt"]
    moved = max(abs(a - b) for a, b in zip(tip_before, tip_after))
    assert moved > 1.0


def test_malformed_frame_keeps_session_alive(ws):
    desc, first = drain_initial(ws)
    ws.send_text("this is not json")
    err = ws.receive_json()
    assert err["type"] == "error" and err["code"] == "malformed-message"
    ws.send_json({"type": "set_control", "name": "L_hand_ctrl.curl", "value": 10.0})
    update = ws.receive_json()
    # the bad frame did not burn a revision
    assert update["revision"] == first["revision"] + 1


def test_unknown_control_error_reply(ws):
    drain_initial(ws)
    ws.send_json({"type": "set_control", "name": "nope.t", "value": 1.0})
    err = ws.receive_json()
    assert err["type"] == "error"


def test_rapid_messages_strictly_increasing_revisions(ws):
    desc, first = drain_initial(ws)
    ws.send_json({"type": "set_control", "name": "L_hand_ctrl.curl", "value": 25.0})
    ws.send_json({"type": "set_control", "name": "L_hand_ctrl.spread", "value": 50.0})
    u1 = ws.receive_json()
    u2 = ws.receive_json()
    assert u2["revision"] == u1["revision"] + 1 == first["revision"] + 2


def test_load_pose_and_set_control_agree_with_direct_evaluation(app):
    rig = app.state.rig_session.rig
    want = rig.evaluate({"L_hand_ctrl.curl": 100.0})
    client = TestClient(app)
    with client.websocket_connect("/ws") as sock:
        drain_initial(sock)
        sock.send_json(
            {"type": "load_pose", "pose": {"controls": {"L_hand_ctrl.curl": 100.0}}}
        )
        update = sock.receive_json()
        from rigforge.math3d import xf_to_mat4

        for name, mat in update["joints"].items():
            ref = xf_to_mat4(want[name])
            assert max(abs(a - b) for a, b in zip(mat, ref)) <= 1e-9


def test_switch_mode_seamless_over_socket(app):
    client = TestClient(app)
    with client.websocket_connect("/ws") as sock:
        drain_initial(sock)
        sock.send_json(
            {
                "type": "load_pose",
                "pose": {"controls": {
                    "L_armFk1_ctrl.r": [25.0, -15.0, 40.0],
                    "L_armFk2_ctrl.r": [0.0, 30.0, 20.0],
                    "L_armIk_ctrl.fkIk": 0.0,
                }},
            }
        )
        before = sock.receive_json()
        sock.send_json(
            {"type": "switch_mode", "limb": "armL", "mode": "ik", "match": True}
        )
        after = sock.receive_json()
        assert after["revision"] == before["revision"] + 1
        assert after["controls"]["L_armIk_ctrl.fkIk"] == 1.0
        for joint in ("L_arm1_jnt", "L_arm2_jnt", "L_arm3_jnt"):
            delta = max(
                abs(a - b)
                for a, b in zip(before["joints"][joint], after["joints"][joint])
            )
            assert delta <= 1e-6  # no pop


def test_switch_mode_error_leaves_mode_unchanged(app):
    client = TestClient(app)
    with client.websocket_connect("/ws") as sock:
        drain_initial(sock)
        sock.send_json({"type": "switch_mode", "limb": "wings", "mode": "ik"})
        err = sock.receive_json()
        assert err["type"] == "error"


def test_ui_round_trip_drag_converges_in_one_reply():
    """Secondary acceptance at the wire: a throttled drag stream of
    set_control frames yields pose updates whose wrist matrix equals the
    dragged target within one message round trip, with revisions strictly
    increasing; the client renders these matrices verbatim."""
    import random

    from rigforge.graph import ControlPose
    from rigforge.math3d import xf_to_mat4

    rig = assemble_character(create_template("biped"))
    fresh_app = create_app(rig)
    rng = random.Random(8)
    client = TestClient(fresh_app)
    with client.websocket_connect("/ws") as sock:
        desc, first = drain_initial(sock)
        last_rev = first["revision"]
        # a drag: 40 intermediate handle positions, one frame per message
        target = None
        for i in range(40):
            target = (rng.uniform(-6, 6), rng.uniform(-10, 4), rng.uniform(-6, 6))
            sock.send_json(
                {"type": "set_control", "name": "L_armIk_ctrl.t", "value": list(target)}
            )
            update = sock.receive_json()  # one reply per message: one round trip
            assert update["type"] == "pose_update"
            assert update["revision"] == last_rev + 1
            last_rev = update["revision"]
        want = rig.evaluate(ControlPose({"L_armIk_ctrl.t": target}))
        wrist_ref = xf_to_mat4(want["L_arm3_jnt"])
        got = update["joints"]["L_arm3_jnt"]
        assert max(abs(a - b) for a, b in zip(got, wrist_ref)) <= 1e-6


def test_two_viewers_both_receive_updates(app):
    client = TestClient(app)
    with client.websocket_connect("/ws") as a:
        drain_initial(a)
        with client.websocket_connect("/ws") as b:
            drain_initial(b)
            a.send_json(
                {"type": "set_control", "name": "C_master_ctrl.t", "value": [1, 2, 3]}
            )
            ua = a.receive_json()
            ub = b.receive_json()
            assert ua["revision"] == ub["revision"]
            assert ua["joints"] == ub["joints"]


def test_unreachable_switch_keeps_mode_and_revision(app):
    client = TestClient(app)
    with client.websocket_connect("/ws") as sock:
        drain_initial(sock)
        # stretch the IK arm past full reach, then ask for a rigid FK match
        sock.send_json(
            {
                "type": "load_pose",
                "pose": {"controls": {
                    "L_armIk_ctrl.fkIk": 1.0,
                    "L_armIk_ctrl.stretch": 1.0,
                    "L_armIk_ctrl.t": [60.0, 0.0, 0.0],
                }},
            }
        )
        loaded = sock.receive_json()
        sock.send_json({"type": "switch_mode", "limb": "armL", "mode": "fk"})
        err = sock.receive_json()
        assert err["type"] == "error"
        # session unharmed and mode unchanged: next mutation bumps by one
        sock.send_json({"type": "set_control", "name": "L_hand_ctrl.curl", "value": 5.0})
        update = sock.receive_json()
        assert update["revision"] == loaded["revision"] + 1
