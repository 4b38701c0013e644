import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rigforge import math3d as m3
from rigforge.errors import InvalidValueError
from rigforge.math3d import (
    EulerRotation,
    Quat,
    Transform,
    Vec3,
    compose,
    euler_to_quaternion,
    gimbal_risk,
    mat_max_delta,
    mat_mul,
    q_mul,
    q_rotate,
    quat_to_euler,
)

import oracles


def rand_transform(rng: random.Random, pivot=True, nonuniform=True) -> Transform:
    s = (
        Vec3(rng.uniform(0.3, 2.5), rng.uniform(0.3, 2.5), rng.uniform(0.3, 2.5))
        if nonuniform
        else Vec3(*([rng.uniform(0.3, 2.5)] * 3))
    )
    return Transform(
        Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)),
        EulerRotation(
            rng.uniform(-180, 180),
            rng.uniform(-180, 180),
            rng.uniform(-180, 180),
            rng.choice(m3.ROTATION_ORDERS),
        ),
        s,
        Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10))
        if pivot
        else m3.ZERO3,
    )


# ---------------------------------------------------------------------------
# Vec3
# ---------------------------------------------------------------------------


def test_vec3_rejects_non_finite():
    with pytest.raises(InvalidValueError):
        Vec3.of(float("nan"), 0, 0)
    with pytest.raises(InvalidValueError):
        Vec3.of(0, float("inf"), 0)


def test_vec3_basic_ops():
    a = Vec3(1, 2, 3)
    b = Vec3(-1, 0, 5)
    assert a + b == Vec3(0, 2, 8)
    assert a - b == Vec3(2, 2, -2)
    assert a.dot(b) == 14
    assert Vec3(1, 0, 0).cross(Vec3(0, 1, 0)) == Vec3(0, 0, 1)
    assert a.reflected_x() == Vec3(-1, 2, 3)
    assert a.reflected_x().reflected_x() == a


# ---------------------------------------------------------------------------
# Euler -> quaternion
# ---------------------------------------------------------------------------


def test_zero_euler_is_identity_quaternion():
    for order in m3.ROTATION_ORDERS:
        q = euler_to_quaternion(EulerRotation(0, 0, 0, order))
        assert q == m3.QUAT_IDENTITY


def test_x90_rotates_y_to_z():
    q = euler_to_quaternion(EulerRotation(90, 0, 0, "XYZ"))
    v = q_rotate(q, (0, 1, 0))
    assert max(abs(v[0] - 0), abs(v[1] - 0), abs(v[2] - 1)) < 1e-12


def test_rotation_order_sensitivity():
    a = euler_to_quaternion(EulerRotation(90, 90, 0, "XYZ"))
    b = euler_to_quaternion(EulerRotation(90, 90, 0, "ZYX"))
    assert min(
        sum((x - y) ** 2 for x, y in zip(a, b)),
        sum((x + y) ** 2 for x, y in zip(a, b)),
    ) > 1e-3


def test_euler_matches_sequential_matrix_oracle_all_orders():
    rng = random.Random(7)
    for _ in range(200):
        order = rng.choice(m3.ROTATION_ORDERS)
        angles = [rng.uniform(-360, 360) for _ in range(3)]
        q = euler_to_quaternion(EulerRotation(*angles, order=order))
        got = np.array(m3.q_to_mat3(q)).reshape(3, 3)
        want = oracles.euler_matrix(angles, order)
        assert np.abs(got - want).max() < 1e-9


def test_quat_to_euler_roundtrip_all_orders():
    rng = random.Random(11)
    for _ in range(300):
        order = rng.choice(m3.ROTATION_ORDERS)
        q = euler_to_quaternion(
            EulerRotation(
                rng.uniform(-180, 180), rng.uniform(-180, 180), rng.uniform(-180, 180), order
            )
        )
        e = quat_to_euler(q, order)
        q2 = euler_to_quaternion(e)
        assert min(
            sum((a - b) ** 2 for a, b in zip(q, q2)),
            sum((a + b) ** 2 for a, b in zip(q, q2)),
        ) < 1e-18


def test_quat_to_euler_at_gimbal():
    for order in m3.ROTATION_ORDERS:
        for mid in (90.0, -90.0):
            angles = [0.0, 0.0, 0.0]
            angles["XYZ".index(order[0])] = 35.0
            angles["XYZ".index(order[1])] = mid
            q = euler_to_quaternion(EulerRotation(*angles, order=order))
            e = quat_to_euler(q, order)
            q2 = euler_to_quaternion(e)
            assert abs(m3.q_dot(q, q2)) > 1.0 - 1e-9


# ---------------------------------------------------------------------------
# Quaternion drift
# ---------------------------------------------------------------------------


def test_quaternion_norm_stable_over_chained_products():
    rng = random.Random(3)
    qs = [
        euler_to_quaternion(
            EulerRotation(rng.uniform(-180, 180), rng.uniform(-180, 180), rng.uniform(-180, 180))
        )
        for _ in range(64)
    ]
    q = m3.QUAT_IDENTITY
    for i in range(1_000_000):
        q = q_mul(q, qs[i & 63])
    norm = math.sqrt(sum(c * c for c in q))
    assert abs(norm - 1.0) <= 1e-9


# ---------------------------------------------------------------------------
# gimbal risk
# ---------------------------------------------------------------------------


def test_gimbal_risk_exact_singularity():
    r = gimbal_risk(EulerRotation(0, 90, 0, "XYZ"))
    assert r.score == 1.0 and r.flagged


def test_gimbal_risk_zero():
    r = gimbal_risk(EulerRotation(0, 0, 0, "XYZ"))
    assert r.score == 0.0 and not r.flagged


def test_gimbal_risk_inside_band():
    # middle axis 80 deg with a 15 deg band: flagged, score = 1 - 10/90
    r = gimbal_risk(EulerRotation(0, 80, 0, "XYZ"), threshold_deg=15.0)
    assert r.flagged
    assert abs(r.score - (1.0 - 10.0 / 90.0)) < 1e-12


def test_gimbal_risk_uses_middle_axis_of_order():
    # for ZXY the middle letter is X
    r = gimbal_risk(EulerRotation(90, 0, 0, "ZXY"))
    assert r.flagged and r.score == 1.0
    r2 = gimbal_risk(EulerRotation(0, 90, 0, "ZXY"))
    assert not r2.flagged


@given(st.floats(-720, 720))
def test_gimbal_risk_symmetric_under_sign_flip(mid):
    a = gimbal_risk(EulerRotation(0, mid, 0, "XYZ"))
    b = gimbal_risk(EulerRotation(0, -mid, 0, "XYZ"))
    assert math.isclose(a.score, b.score, abs_tol=1e-12)
    assert a.flagged == b.flagged


# ---------------------------------------------------------------------------
# Transform / compose
# ---------------------------------------------------------------------------


def test_identity_compose():
    rng = random.Random(1)
    t = rand_transform(rng)
    for left in (True, False):
        out = compose(Transform.identity(), t) if left else compose(t, Transform.identity())
        assert mat_max_delta(out.matrix(), t.matrix()) <= 1e-9


def test_translation_additivity():
    a = Transform.from_translation(1, 0, 0)
    b = Transform.from_translation(0, 2, 0)
    out = compose(a, b)
    assert mat_max_delta(out.matrix(), Transform.from_translation(1, 2, 0).matrix()) == 0.0


def test_compose_matches_matrix_oracle_random_pairs():
    rng = random.Random(42)
    for _ in range(200):
        a = rand_transform(rng)
        b = rand_transform(rng)
        got = compose(a, b).matrix()
        want = oracles.transform_matrix(a) @ oracles.transform_matrix(b)
        assert oracles.max_entry_delta(got, want) <= 1e-9


def test_transform_matrix_matches_oracle():
    rng = random.Random(5)
    for _ in range(200):
        t = rand_transform(rng)
        assert oracles.max_entry_delta(t.matrix(), oracles.transform_matrix(t)) <= 1e-9


def test_compose_associative():
    rng = random.Random(9)
    for _ in range(100):
        a, b, c = (rand_transform(rng) for _ in range(3))
        left = compose(compose(a, b), c).matrix()
        right = compose(a, compose(b, c)).matrix()
        assert mat_max_delta(left, right) <= 1e-9


def test_pivot_semantics_point_fixed():
    # rotating about a pivot keeps the pivot point fixed
    p = Vec3(3, -2, 7)
    t = Transform(rotation=EulerRotation(0, 37, 0), pivot=p)
    moved = m3.mat_apply_point(t.matrix(), p)
    assert (moved - p).length() < 1e-12


def test_zero_scale_rejected():
    with pytest.raises(InvalidValueError):
        Transform(scale=Vec3(0, 1, 1))


def test_transform_json_roundtrip():
    rng = random.Random(13)
    for _ in range(50):
        t = rand_transform(rng)
        back = Transform.from_json(t.to_json())
        assert back == t


def test_xform_matches_matrix_for_uniform_scale_chains():
    rng = random.Random(21)
    for _ in range(100):
        a = rand_transform(rng, nonuniform=False)
        b = rand_transform(rng, nonuniform=False)
        xf = m3.xf_mul(a.to_xform(), b.to_xform())
        want = oracles.transform_matrix(a) @ oracles.transform_matrix(b)
        assert oracles.max_entry_delta(m3.xf_to_mat4(xf), want) <= 1e-9


def test_xform_inverse():
    rng = random.Random(23)
    for _ in range(100):
        a = rand_transform(rng, nonuniform=False).to_xform()
        ident = m3.xf_mul(a, m3.xf_inv(a))
        assert oracles.max_entry_delta(m3.xf_to_mat4(ident), np.eye(4)) < 1e-9


def test_slerp_endpoints_exact():
    a = euler_to_quaternion(EulerRotation(10, 20, 30))
    b = euler_to_quaternion(EulerRotation(-40, 15, 8))
    assert m3.q_slerp(a, b, 0.0) == Quat(*a)
    assert m3.q_slerp(a, b, 1.0) == Quat(*b)


def test_slerp_same_axis_is_linear_in_angle():
    a = m3.QUAT_IDENTITY
    b = m3.q_from_axis_angle((0, 0, 1), 120.0)
    mid = m3.q_slerp(a, b, 0.25)
    want = m3.q_from_axis_angle((0, 0, 1), 30.0)
    assert abs(m3.q_dot(mid, want)) > 1.0 - 1e-12
