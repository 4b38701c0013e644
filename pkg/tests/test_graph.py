import random

import pytest

from rigforge.errors import (
    CycleError,
    MissingControlError,
    PortOccupiedError,
    TypeMismatchError,
    UnknownPartError,
)
from rigforge.graph import (
    ControlPose,
    EvalSession,
    RigGraph,
    evaluate,
)
from rigforge.math3d import (
    QUAT_IDENTITY,
    ONE3,
    Quat,
    Vec3,
    Xform,
    euler_to_quaternion,
    EulerRotation,
)


def xf(t=(0, 0, 0), q=QUAT_IDENTITY, s=(1, 1, 1)) -> Xform:
    return Xform(Vec3(*t), Quat(*q), Vec3(*s))


def simple_chain_graph() -> RigGraph:
    """master control -> offset constraint chain -> three joints."""
    g = RigGraph()
    g.add("base", "Constant", part="root", value_type="transform", value=xf())
    g.add(
        "ctrl.t", "ControlAttribute", part="root",
        name="master.t", value_type="vec3", default=(0.0, 0.0, 0.0),
    )
    g.add(
        "ctrl.r", "ControlAttribute", part="root",
        name="master.r", value_type="rotation", default=(0.0, 0.0, 0.0),
        rotate_order="XYZ",
    )
    g.add(
        "pc0", "ParentConstraint", part="root",
        offset=xf(t=(0, 1, 0)), use_t=True, use_r=True,
    )
    g.connect("base", "value", "pc0", "target")
    g.connect("ctrl.t", "value", "pc0", "t")
    g.connect("ctrl.r", "value", "pc0", "r")
    prev = "pc0"
    for i in range(1, 3):
        g.add(f"pc{i}", "ParentConstraint", part="root", offset=xf(t=(0, 2, 0)))
        g.connect(prev, "value", f"pc{i}", "target")
        prev = f"pc{i}"
    for i in range(3):
        g.add(f"jo{i}", "JointOutput", part="root", joint=f"joint{i}")
        g.connect("base", "value", f"jo{i}", "base")
        g.connect(f"pc{i}", "value", f"jo{i}", "local")
    return g


# ---------------------------------------------------------------------------
# connections
# ---------------------------------------------------------------------------


def test_connect_matching_types_ok():
    g = RigGraph()
    g.add("a", "Constant", value_type="scalar", value=1.0)
    g.add("c", "Clamp", min=0.0, max=2.0)
    g.connect("a", "value", "c", "value")


def test_connect_type_mismatch():
    g = RigGraph()
    g.add("a", "Constant", value_type="scalar", value=1.0)
    g.add("d", "Distance")
    with pytest.raises(TypeMismatchError):
        g.connect("a", "value", "d", "a")


def test_connect_port_occupied():
    g = RigGraph()
    g.add("a", "Constant", value_type="scalar", value=1.0)
    g.add("b", "Constant", value_type="scalar", value=2.0)
    g.add("c", "Clamp")
    g.connect("a", "value", "c", "value")
    with pytest.raises(PortOccupiedError):
        g.connect("b", "value", "c", "value")


def test_three_node_loop_rejected():
    g = RigGraph()
    for n in ("x", "y", "z"):
        g.add(n, "Clamp")
    g.add("src", "Constant", value_type="scalar", value=0.0)
    g.connect("x", "value", "y", "value")
    g.connect("y", "value", "z", "value")
    with pytest.raises(CycleError):
        g.connect("z", "value", "x", "value")


# ---------------------------------------------------------------------------
# topo order
# ---------------------------------------------------------------------------


def test_topo_chain():
    g = RigGraph()
    g.add("a", "Constant", value_type="scalar", value=0.0)
    g.add("b", "Clamp")
    g.add("c", "Clamp")
    g.connect("a", "value", "b", "value")
    g.connect("b", "value", "c", "value")
    assert g.topo_order() == ["a", "b", "c"]


def test_topo_diamond():
    g = RigGraph()
    g.add("a", "Constant", value_type="scalar", value=0.0)
    g.add("b", "Clamp")
    g.add("c", "Clamp")
    g.add("d", "Ratio")
    g.connect("a", "value", "b", "value")
    g.connect("a", "value", "c", "value")
    g.connect("b", "value", "d", "numerator")
    g.connect("c", "value", "d", "denominator")
    order = g.topo_order()
    assert order[0] == "a" and order[-1] == "d"


def test_topo_random_dags_edge_audit():
    rng = random.Random(0)
    for _ in range(200):
        g = RigGraph()
        n = rng.randint(3, 14)
        g.add("n00", "Constant", value_type="scalar", value=0.0)
        for i in range(1, n):
            g.add(f"n{i:02d}", "Blend", value_type="scalar")
        # wire random forward edges into free ports
        free = [(f"n{i:02d}", port) for i in range(1, n) for port in ("a", "b", "weight")]
        rng.shuffle(free)
        for dst, port in free[: rng.randint(n - 1, len(free))]:
            src_idx = rng.randrange(0, int(dst[1:]))
            g.connect(f"n{src_idx:02d}", "value", dst, port)
        order = g.topo_order()
        pos = {nid: i for i, nid in enumerate(order)}
        for (dst, _p), (src, _sp) in g.connections.items():
            assert pos[src] < pos[dst]
        # determinism
        assert g.topo_order() == order


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def test_constant_through_joint_output():
    g = RigGraph()
    want = xf(t=(1, 2, 3))
    g.add("c", "Constant", value_type="transform", value=want)
    g.add("base", "Constant", value_type="transform", value=xf())
    g.add("jo", "JointOutput", joint="j")
    g.connect("base", "value", "jo", "base")
    g.connect("c", "value", "jo", "local")
    worlds = evaluate(g)
    assert worlds["j"] == want


def test_distance_euclidean():
    g = RigGraph()
    g.add("a", "Constant", value_type="vec3", value=Vec3(0, 0, 0))
    g.add("b", "Constant", value_type="vec3", value=Vec3(3, 4, 0))
    g.add("d", "Distance")
    g.connect("a", "value", "d", "a")
    g.connect("b", "value", "d", "b")
    s = EvalSession(g)
    s.evaluate()
    assert s.value_of("d") == 5.0


def test_condition_equality_takes_else():
    g = RigGraph()
    g.add("x", "Constant", value_type="scalar", value=2.0)
    g.add("c", "Constant", value_type="scalar", value=2.0)
    g.add("a", "Constant", value_type="scalar", value=10.0)
    g.add("b", "Constant", value_type="scalar", value=-10.0)
    g.add("cond", "Condition", value_type="scalar")
    g.connect("x", "value", "cond", "x")
    g.connect("c", "value", "cond", "threshold")
    g.connect("a", "value", "cond", "if_greater")
    g.connect("b", "value", "cond", "else_value")
    s = EvalSession(g)
    s.evaluate()
    assert s.value_of("cond") == -10.0


def test_unknown_control_rejected():
    g = simple_chain_graph()
    with pytest.raises(MissingControlError):
        evaluate(g, ControlPose({"nope.t": (1, 2, 3)}))


def test_control_type_mismatch_rejected():
    g = simple_chain_graph()
    with pytest.raises(TypeMismatchError):
        evaluate(g, ControlPose({"master.t": 5.0}))


def test_defaults_apply_when_unspecified():
    g = simple_chain_graph()
    worlds = evaluate(g)
    assert worlds["joint0"].t == Vec3(0, 1, 0)
    assert worlds["joint2"].t == Vec3(0, 5, 0)


def test_evaluate_pure_and_counts():
    g = simple_chain_graph()
    pose = ControlPose({"master.t": (2.0, 0.0, 0.0), "master.r": (0.0, 90.0, 0.0)})
    s = EvalSession(g)
    w1 = s.evaluate(pose)
    counts1 = dict(s.eval_counts)
    w2 = s.evaluate(pose)
    assert w1 == w2
    for nid, c in counts1.items():
        assert c == 1
        assert s.eval_counts[nid] == 2


def test_incremental_equals_full():
    g = simple_chain_graph()
    rng = random.Random(4)
    inc = EvalSession(g)
    inc.evaluate()
    names = ["master.t", "master.r"]
    current = {}
    for _ in range(40):
        name = rng.choice(names)
        val = (
            rng.uniform(-5, 5),
            rng.uniform(-5, 5),
            rng.uniform(-5, 5),
        )
        current[name] = val
        got = inc.apply_control_change(name, val)
        want = evaluate(g, ControlPose(current))
        assert got == want  # bit-exact


def test_dirty_propagation_matches_bruteforce():
    g = simple_chain_graph()
    got = g.dirty_propagate(["master.t"])
    # brute-force downstream closure by walking connections
    downstream = {}
    for (dst, _p), (src, _sp) in g.connections.items():
        downstream.setdefault(src, set()).add(dst)
    want = set()
    stack = ["ctrl.t"]
    while stack:
        cur = stack.pop()
        if cur in want:
            continue
        want.add(cur)
        stack.extend(downstream.get(cur, ()))
    assert got == want


def test_dirty_nothing_is_empty():
    g = simple_chain_graph()
    assert g.dirty_propagate([]) == set()


def test_remove_part_unknown():
    g = simple_chain_graph()
    with pytest.raises(UnknownPartError):
        g.remove_part("wings")


def test_remove_part_pins_rest_values():
    g = RigGraph()
    g.add("base", "Constant", part="root", value_type="transform", value=xf())
    g.add(
        "actrl", "ControlAttribute", part="a",
        name="a.t", value_type="vec3", default=(0.0, 0.0, 0.0),
    )
    g.add("apc", "ParentConstraint", part="a", offset=xf(t=(1, 0, 0)), use_t=True)
    g.connect("base", "value", "apc", "target")
    g.connect("actrl", "value", "apc", "t")
    # part b hangs off part a
    g.add("bpc", "ParentConstraint", part="b", offset=xf(t=(0, 1, 0)))
    g.connect("apc", "value", "bpc", "target")
    g.add("bjo", "JointOutput", part="b", joint="bj")
    g.connect("base", "value", "bjo", "base")
    g.connect("bpc", "value", "bjo", "local")
    before = evaluate(g)
    g.remove_part("a")
    after = evaluate(g)
    assert after["bj"] == before["bj"]
    assert "apc" not in g.nodes


def test_extract_part_standalone():
    g = RigGraph()
    g.add("base", "Constant", part="root", value_type="transform", value=xf())
    g.add(
        "actrl", "ControlAttribute", part="a",
        name="a.t", value_type="vec3", default=(0.0, 0.0, 0.0),
    )
    g.add("apc", "ParentConstraint", part="a", offset=xf(t=(1, 0, 0)), use_t=True)
    g.connect("base", "value", "apc", "target")
    g.connect("actrl", "value", "apc", "t")
    g.add("ajo", "JointOutput", part="a", joint="aj")
    g.connect("base", "value", "ajo", "base")
    g.connect("apc", "value", "ajo", "local")
    sub = g.extract_part("a")
    worlds = evaluate(sub, ControlPose({"a.t": (0.0, 2.0, 0.0)}))
    assert worlds["aj"].t == Vec3(1, 2, 0)


def test_graph_json_roundtrip():
    g = simple_chain_graph()
    doc = g.to_json()
    back = RigGraph.from_json(doc)
    assert back.to_json() == doc
    assert evaluate(back) == evaluate(g)


def test_parent_constraint_channels_and_pivot():
    g = RigGraph()
    g.add("base", "Constant", value_type="transform", value=xf())
    g.add(
        "roll", "ControlAttribute", name="foot.roll", value_type="scalar", default=0.0
    )
    g.add(
        "grp", "ParentConstraint",
        channels=(("roll_in", "X", 1.0),),
        pivot=Vec3(0.0, 0.0, 2.0),
        rotate_order="XYZ",
    )
    g.connect("base", "value", "grp", "target")
    g.connect("roll", "value", "grp", "roll_in")
    g.add("jo", "JointOutput", joint="j")
    g.connect("base", "value", "jo", "base")
    g.connect("grp", "value", "jo", "local")

    s = EvalSession(g)
    s.evaluate(ControlPose({"foot.roll": 90.0}))
    world = s.joint_worlds["j"]
    # the pivot point itself must not move
    from rigforge.math3d import xf_point

    assert (xf_point(world, (0, 0, 2)) - Vec3(0, 0, 2)).length() < 1e-9
    # a point at the origin swings about the pivot: (0,0,0) -> (0, 2, 2) + rot
    moved = xf_point(world, (0, 0, 0))
    assert (moved - Vec3(0.0, 2.0, 2.0)).length() < 1e-9
