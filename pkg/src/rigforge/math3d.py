"""Vectors, rotations with explicit rotation order, and pivoted transforms.

Conventions, fixed once and relied on everywhere:

- Right-handed coordinate system, Y up, characters face +Z.
- Angles are degrees at every public surface; radians only inside bodies.
- Rotation orders are extrinsic: ``"XYZ"`` rotates about the fixed X axis
  first, then Y, then Z, i.e. the column-vector matrix is ``Rz @ Ry @ Rx``.
- Quaternions are ``(w, x, y, z)`` and kept unit length; products
  renormalize so chained compositions cannot drift.
- A :class:`Transform` is authored as translate/rotate/scale plus a pivot
  point; its ground truth is the 4x4 row-major matrix
  ``T * P * R * S * P^-1``, so moving the pivot never moves geometry.

Two transform representations coexist on purpose: :class:`Transform` is the
authoring/serialization type, while :class:`Xform` (position, quaternion,
scale) is the evaluation type used by the rig graph.  ``Xform`` composition
is exact only while scales above rotations stay uniform; compiled rigs
guarantee that, arbitrary authored hierarchies go through matrices instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .errors import InvalidValueError

ROTATION_ORDERS = ("XYZ", "YZX", "ZXY", "XZY", "YXZ", "ZYX")

_AXIS_INDEX = {"X": 0, "Y": 1, "Z": 2}
# even permutations of (X, Y, Z); the other three orders are odd
_EVEN_ORDERS = frozenset({"XYZ", "YZX", "ZXY"})

DEG = math.pi / 180.0
RAD = 180.0 / math.pi


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidValueError(f"non-finite component: {v!r}")


# ---------------------------------------------------------------------------
# Vec3
# ---------------------------------------------------------------------------


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    @staticmethod
    def of(x: float, y: float, z: float) -> "Vec3":
        """Validating constructor; rejects NaN/Inf."""
        x, y, z = float(x), float(y), float(z)
        _check_finite(x, y, z)
        return Vec3(x, y, z)

    def __add__(self, other):  # type: ignore[override]
        return Vec3(self[0] + other[0], self[1] + other[1], self[2] + other[2])

    def __sub__(self, other):
        return Vec3(self[0] - other[0], self[1] - other[1], self[2] - other[2])

    def __mul__(self, k: float):  # type: ignore[override]
        return Vec3(self[0] * k, self[1] * k, self[2] * k)

    __rmul__ = __mul__

    def __neg__(self):
        return Vec3(-self[0], -self[1], -self[2])

    def dot(self, other) -> float:
        return self[0] * other[0] + self[1] * other[1] + self[2] * other[2]

    def cross(self, other) -> "Vec3":
        ax, ay, az = self
        bx, by, bz = other
        return Vec3(ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx)

    def length(self) -> float:
        return math.sqrt(self[0] ** 2 + self[1] ** 2 + self[2] ** 2)

    def normalized(self) -> "Vec3":
        n = self.length()
        if n < 1e-12:
            raise InvalidValueError("cannot normalize near-zero vector")
        inv = 1.0 / n
        return Vec3(self[0] * inv, self[1] * inv, self[2] * inv)

    def reflected_x(self) -> "Vec3":
        """Sagittal (YZ-plane) mirror."""
        return Vec3(-self[0], self[1], self[2])


ZERO3 = Vec3(0.0, 0.0, 0.0)
ONE3 = Vec3(1.0, 1.0, 1.0)
X_AXIS = Vec3(1.0, 0.0, 0.0)
Y_AXIS = Vec3(0.0, 1.0, 0.0)
Z_AXIS = Vec3(0.0, 0.0, 1.0)


def vlerp(a: Sequence[float], b: Sequence[float], t: float) -> Vec3:
    return Vec3(
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    )


def vdist(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt(
        (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2
    )


# ---------------------------------------------------------------------------
# Quaternions
# ---------------------------------------------------------------------------


class Quat(NamedTuple):
    w: float
    x: float
    y: float
    z: float


QUAT_IDENTITY = Quat(1.0, 0.0, 0.0, 0.0)

_NORM_EPS = 1e-12


def q_mul(a: Sequence[float], b: Sequence[float]) -> Quat:
    """Hamilton product, renormalized so long chains stay unit length."""
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    w = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
    x = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
    y = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2
    z = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2
    n2 = w * w + x * x + y * y + z * z
    if abs(n2 - 1.0) > _NORM_EPS:
        inv = 1.0 / math.sqrt(n2)
        return Quat(w * inv, x * inv, y * inv, z * inv)
    return Quat(w, x, y, z)


def q_conjugate(q: Sequence[float]) -> Quat:
    return Quat(q[0], -q[1], -q[2], -q[3])


def q_normalize(q: Sequence[float]) -> Quat:
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n < _NORM_EPS:
        raise InvalidValueError("cannot normalize zero quaternion")
    inv = 1.0 / n
    return Quat(w * inv, x * inv, y * inv, z * inv)


def q_rotate(q: Sequence[float], v: Sequence[float]) -> Vec3:
    """Rotate vector v by unit quaternion q (q v q*)."""
    w, x, y, z = q
    vx, vy, vz = v[0], v[1], v[2]
    # t = 2 * cross(q.xyz, v)
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return Vec3(
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def q_from_axis_angle(axis: Sequence[float], degrees: float) -> Quat:
    ax, ay, az = axis
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n < _NORM_EPS:
        raise InvalidValueError("rotation axis must be nonzero")
    half = degrees * DEG * 0.5
    s = math.sin(half) / n
    return Quat(math.cos(half), ax * s, ay * s, az * s)


def q_dot(a: Sequence[float], b: Sequence[float]) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]


def q_slerp(a: Sequence[float], b: Sequence[float], t: float) -> Quat:
    """Shortest-arc spherical interpolation; endpoints returned verbatim."""
    if t == 0.0:
        return Quat(*a)
    if t == 1.0:
        return Quat(*b)
    d = q_dot(a, b)
    bw, bx, by, bz = b
    if d < 0.0:
        d = -d
        bw, bx, by, bz = -bw, -bx, -by, -bz
    if d > 1.0 - 1e-12:
        # nearly parallel: lerp + renormalize
        return q_normalize(
            (
                a[0] + (bw - a[0]) * t,
                a[1] + (bx - a[1]) * t,
                a[2] + (by - a[2]) * t,
                a[3] + (bz - a[3]) * t,
            )
        )
    theta = math.acos(max(-1.0, min(1.0, d)))
    s = math.sin(theta)
    ka = math.sin((1.0 - t) * theta) / s
    kb = math.sin(t * theta) / s
    return Quat(
        a[0] * ka + bw * kb,
        a[1] * ka + bx * kb,
        a[2] * ka + by * kb,
        a[3] * ka + bz * kb,
    )


def q_angle_deg(q: Sequence[float]) -> float:
    """Absolute rotation angle represented by q, in degrees."""
    w = max(-1.0, min(1.0, abs(q[0])))
    return 2.0 * math.acos(w) * RAD


def q_to_mat3(q: Sequence[float]):
    """Row-major 3x3 rotation tuple."""
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return (
        1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy),
        2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
        2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy),
    )


def q_from_mat3(m: Sequence[float]) -> Quat:
    """Quaternion from a row-major 3x3 rotation (Shepperd's method)."""
    m00, m01, m02, m10, m11, m12, m20, m21, m22 = m
    tr = m00 + m11 + m22
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        return q_normalize(
            ((0.25 * s), (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
        )
    if m00 > m11 and m00 > m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2.0
        return q_normalize(
            ((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
        )
    if m11 > m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2.0
        return q_normalize(
            ((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
        )
    s = math.sqrt(1.0 + m22 - m00 - m11) * 2.0
    return q_normalize(
        ((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
    )


def _axis_quat(axis: int, degrees: float) -> Quat:
    half = degrees * DEG * 0.5
    c, s = math.cos(half), math.sin(half)
    if axis == 0:
        return Quat(c, s, 0.0, 0.0)
    if axis == 1:
        return Quat(c, 0.0, s, 0.0)
    return Quat(c, 0.0, 0.0, s)


# ---------------------------------------------------------------------------
# Euler rotations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class EulerRotation:
    """Per-axis angles in degrees plus an explicit rotation order.

    Angles are intentionally unclamped; animation curves stay continuous
    across +-180.
    """

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    order: str = "XYZ"

    def __post_init__(self):
        if self.order not in ROTATION_ORDERS:
            raise InvalidValueError(f"unknown rotation order {self.order!r}")
        _check_finite(self.x, self.y, self.z)

    def angles(self) -> Vec3:
        return Vec3(self.x, self.y, self.z)

    def to_quat(self) -> Quat:
        return euler_to_quaternion(self)

    def mirrored(self) -> "EulerRotation":
        """Sagittal conjugate: same X, negated Y and Z, same order."""
        return EulerRotation(self.x, -self.y, -self.z, self.order)


EULER_IDENTITY = EulerRotation()


def euler_to_quaternion(e: EulerRotation) -> Quat:
    """Quaternion equal to the sequential fixed-axis rotations of ``e``."""
    per_axis = (e.x, e.y, e.z)
    q = QUAT_IDENTITY
    for letter in e.order:
        i = _AXIS_INDEX[letter]
        # later rotations multiply on the left (column-vector convention)
        q = q_mul(_axis_quat(i, per_axis[i]), q)
    return q


def quat_to_euler(q: Sequence[float], order: str = "XYZ") -> EulerRotation:
    """Euler angles (degrees) reproducing ``q`` under ``order``.

    Inverse of :func:`euler_to_quaternion` up to angle aliasing; at the
    gimbal singularity the last-axis angle is folded to zero.
    """
    if order not in ROTATION_ORDERS:
        raise InvalidValueError(f"unknown rotation order {order!r}")
    m = q_to_mat3(q)

    def at(r: int, c: int) -> float:
        return m[3 * r + c]

    f, mid, l = (_AXIS_INDEX[ch] for ch in order)
    even = order in _EVEN_ORDERS
    sign = -1.0 if even else 1.0
    sin_b = sign * at(l, f)
    sin_b = max(-1.0, min(1.0, sin_b))
    if abs(sin_b) < 1.0 - 1e-10:
        beta = math.asin(sin_b)
        if even:
            alpha = math.atan2(at(l, mid), at(l, l))
            gamma = math.atan2(at(mid, f), at(f, f))
        else:
            alpha = math.atan2(-at(l, mid), at(l, l))
            gamma = math.atan2(-at(mid, f), at(f, f))
        angles = [0.0, 0.0, 0.0]
        angles[f] = alpha * RAD
        angles[mid] = beta * RAD
        angles[l] = gamma * RAD
        return EulerRotation(angles[0], angles[1], angles[2], order)

    # Gimbal singularity: middle angle +-90, first/last axes collapse.
    beta = math.copysign(math.pi / 2.0, sin_b)
    candidates = []
    for s in (1.0, -1.0):
        alpha = math.atan2(s * at(f, mid), at(mid, mid))
        angles = [0.0, 0.0, 0.0]
        angles[f] = alpha * RAD
        angles[mid] = beta * RAD
        candidates.append(EulerRotation(angles[0], angles[1], angles[2], order))
    # pick the candidate that actually reproduces q
    best = max(candidates, key=lambda e: abs(q_dot(euler_to_quaternion(e), q)))
    return best


class GimbalRisk(NamedTuple):
    score: float
    flagged: bool


def gimbal_risk(e: EulerRotation, threshold_deg: float = 15.0) -> GimbalRisk:
    """How close the middle rotation axis sits to the +-90 deg singularity.

    Score ramps linearly from 0 (middle axis at 0 or 180) to 1 (exactly at
    +-90); the flag trips inside ``threshold_deg`` of the singularity.
    """
    per_axis = (e.x, e.y, e.z)
    middle = per_axis[_AXIS_INDEX[e.order[1]]]
    w = math.remainder(middle, 360.0)  # wrap to [-180, 180]
    d = min(abs(w - 90.0), abs(w + 90.0))
    score = max(0.0, 1.0 - d / 90.0)
    return GimbalRisk(score, d <= threshold_deg)


# ---------------------------------------------------------------------------
# 4x4 matrices (row-major 16-tuples) - oracle/serialization representation
# ---------------------------------------------------------------------------

MAT4_IDENTITY = (
    1.0, 0.0, 0.0, 0.0,
    0.0, 1.0, 0.0, 0.0,
    0.0, 0.0, 1.0, 0.0,
    0.0, 0.0, 0.0, 1.0,
)


def mat_mul(a: Sequence[float], b: Sequence[float]):
    """Row-major 4x4 product a @ b."""
    (
        a00, a01, a02, a03, a10, a11, a12, a13,
        a20, a21, a22, a23, a30, a31, a32, a33,
    ) = a
    (
        b00, b01, b02, b03, b10, b11, b12, b13,
        b20, b21, b22, b23, b30, b31, b32, b33,
    ) = b
    return (
        a00 * b00 + a01 * b10 + a02 * b20 + a03 * b30,
        a00 * b01 + a01 * b11 + a02 * b21 + a03 * b31,
        a00 * b02 + a01 * b12 + a02 * b22 + a03 * b32,
        a00 * b03 + a01 * b13 + a02 * b23 + a03 * b33,
        a10 * b00 + a11 * b10 + a12 * b20 + a13 * b30,
        a10 * b01 + a11 * b11 + a12 * b21 + a13 * b31,
        a10 * b02 + a11 * b12 + a12 * b22 + a13 * b32,
        a10 * b03 + a11 * b13 + a12 * b23 + a13 * b33,
        a20 * b00 + a21 * b10 + a22 * b20 + a23 * b30,
        a20 * b01 + a21 * b11 + a22 * b21 + a23 * b31,
        a20 * b02 + a21 * b12 + a22 * b22 + a23 * b32,
        a20 * b03 + a21 * b13 + a22 * b23 + a23 * b33,
        a30 * b00 + a31 * b10 + a32 * b20 + a33 * b30,
        a30 * b01 + a31 * b11 + a32 * b21 + a33 * b31,
        a30 * b02 + a31 * b12 + a32 * b22 + a33 * b32,
        a30 * b03 + a31 * b13 + a32 * b23 + a33 * b33,
    )


def mat_apply_point(m: Sequence[float], p: Sequence[float]) -> Vec3:
    x, y, z = p[0], p[1], p[2]
    return Vec3(
        m[0] * x + m[1] * y + m[2] * z + m[3],
        m[4] * x + m[5] * y + m[6] * z + m[7],
        m[8] * x + m[9] * y + m[10] * z + m[11],
    )


def mat_affine_inverse(m: Sequence[float]):
    """Inverse of an affine matrix (last row 0 0 0 1)."""
    a, b, c = m[0], m[1], m[2]
    d, e, f = m[4], m[5], m[6]
    g, h, i = m[8], m[9], m[10]
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    if abs(det) < 1e-300:
        raise InvalidValueError("matrix is singular")
    inv = 1.0 / det
    i00 = (e * i - f * h) * inv
    i01 = (c * h - b * i) * inv
    i02 = (b * f - c * e) * inv
    i10 = (f * g - d * i) * inv
    i11 = (a * i - c * g) * inv
    i12 = (c * d - a * f) * inv
    i20 = (d * h - e * g) * inv
    i21 = (b * g - a * h) * inv
    i22 = (a * e - b * d) * inv
    tx, ty, tz = m[3], m[7], m[11]
    return (
        i00, i01, i02, -(i00 * tx + i01 * ty + i02 * tz),
        i10, i11, i12, -(i10 * tx + i11 * ty + i12 * tz),
        i20, i21, i22, -(i20 * tx + i21 * ty + i22 * tz),
        0.0, 0.0, 0.0, 1.0,
    )


def mat_max_delta(a: Sequence[float], b: Sequence[float]) -> float:
    return max(abs(x - y) for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# Engine transform: position + quaternion + scale
# ---------------------------------------------------------------------------


class Xform(NamedTuple):
    """Rigid transform with per-axis scale; the rig graph's transform value.

    Composition treats the parent scale as uniform; compiled rigs only ever
    put uniform scale above rotations, which keeps this exact.
    """

    t: Vec3
    q: Quat
    s: Vec3


XFORM_IDENTITY = Xform(ZERO3, QUAT_IDENTITY, ONE3)


def xf_mul(a: Xform, b: Xform) -> Xform:
    # fully unrolled: this is the evaluation hot path
    (atx, aty, atz), (aqw, aqx, aqy, aqz), (asx, asy, asz) = a
    (btx, bty, btz), (bqw, bqx, bqy, bqz), (bsx, bsy, bsz) = b
    vx = btx * asx
    vy = bty * asy
    vz = btz * asz
    tx = 2.0 * (aqy * vz - aqz * vy)
    ty = 2.0 * (aqz * vx - aqx * vz)
    tz = 2.0 * (aqx * vy - aqy * vx)
    w = aqw * bqw - aqx * bqx - aqy * bqy - aqz * bqz
    x = aqw * bqx + aqx * bqw + aqy * bqz - aqz * bqy
    y = aqw * bqy - aqx * bqz + aqy * bqw + aqz * bqx
    z = aqw * bqz + aqx * bqy - aqy * bqx + aqz * bqw
    n2 = w * w + x * x + y * y + z * z
    if n2 - 1.0 > 1e-12 or 1.0 - n2 > 1e-12:
        inv = 1.0 / math.sqrt(n2)
        w, x, y, z = w * inv, x * inv, y * inv, z * inv
    return Xform(
        Vec3(
            atx + vx + aqw * tx + (aqy * tz - aqz * ty),
            aty + vy + aqw * ty + (aqz * tx - aqx * tz),
            atz + vz + aqw * tz + (aqx * ty - aqy * tx),
        ),
        Quat(w, x, y, z),
        Vec3(asx * bsx, asy * bsy, asz * bsz),
    )


def xf_inv(a: Xform) -> Xform:
    t, q, s = a
    iq = q_conjugate(q)
    isx, isy, isz = 1.0 / s[0], 1.0 / s[1], 1.0 / s[2]
    ut = q_rotate(iq, t)
    return Xform(Vec3(-ut[0] * isx, -ut[1] * isy, -ut[2] * isz), iq, Vec3(isx, isy, isz))


def xf_point(a: Xform, p: Sequence[float]) -> Vec3:
    t, q, s = a
    moved = q_rotate(q, (p[0] * s[0], p[1] * s[1], p[2] * s[2]))
    return Vec3(t[0] + moved[0], t[1] + moved[1], t[2] + moved[2])


def xf_from_tq(t: Sequence[float], q: Sequence[float]) -> Xform:
    return Xform(Vec3(*t), Quat(*q), ONE3)


def xf_to_mat4(a: Xform):
    t, q, s = a
    m = q_to_mat3(q)
    return (
        m[0] * s[0], m[1] * s[1], m[2] * s[2], t[0],
        m[3] * s[0], m[4] * s[1], m[5] * s[2], t[1],
        m[6] * s[0], m[7] * s[1], m[8] * s[2], t[2],
        0.0, 0.0, 0.0, 1.0,
    )


def xf_mirror_x(a: Xform) -> Xform:
    """Sagittal conjugate S a S with S = diag(-1, 1, 1)."""
    t, q, s = a
    return Xform(Vec3(-t[0], t[1], t[2]), Quat(q[0], q[1], -q[2], -q[3]), s)


# ---------------------------------------------------------------------------
# Authored transform (translate / rotate / scale / pivot)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Transform:
    """Authored TRS-with-pivot transform.

    ``quaternion`` is derived from ``rotation`` at construction.  Results of
    :func:`compose` carry the exact product matrix alongside a best-effort
    TRS decomposition, so matrix-level queries never pay decomposition error.
    """

    translation: Vec3 = ZERO3
    rotation: EulerRotation = EULER_IDENTITY
    scale: Vec3 = ONE3
    pivot: Vec3 = ZERO3
    quaternion: Quat = field(init=False, compare=False, repr=False)
    _baked: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        t, s, p = self.translation, self.scale, self.pivot
        _check_finite(t[0], t[1], t[2], s[0], s[1], s[2], p[0], p[1], p[2])
        if 0.0 in (s[0], s[1], s[2]):
            raise InvalidValueError("scale components must be nonzero")
        if not isinstance(self.translation, Vec3):
            object.__setattr__(self, "translation", Vec3(*self.translation))
        if not isinstance(self.scale, Vec3):
            object.__setattr__(self, "scale", Vec3(*self.scale))
        if not isinstance(self.pivot, Vec3):
            object.__setattr__(self, "pivot", Vec3(*self.pivot))
        object.__setattr__(self, "quaternion", self.rotation.to_quat())

    # -- constructors -----------------------------------------------------

    @staticmethod
    def identity() -> "Transform":
        return IDENTITY_TRANSFORM

    @staticmethod
    def from_translation(x: float, y: float, z: float) -> "Transform":
        return Transform(translation=Vec3.of(x, y, z))

    @staticmethod
    def from_rotation(x: float, y: float, z: float, order: str = "XYZ") -> "Transform":
        return Transform(rotation=EulerRotation(x, y, z, order))

    @staticmethod
    def from_matrix(m: Sequence[float]) -> "Transform":
        """Best-effort TRS view of an affine matrix; the matrix itself is kept.

        Shear (nonuniform scale composed under rotation) survives only in
        the baked matrix, never in the TRS fields.
        """
        m = tuple(float(v) for v in m)
        t = Vec3(m[3], m[7], m[11])
        c0 = (m[0], m[4], m[8])
        c1 = (m[1], m[5], m[9])
        c2 = (m[2], m[6], m[10])
        sx = math.sqrt(c0[0] ** 2 + c0[1] ** 2 + c0[2] ** 2)
        sy = math.sqrt(c1[0] ** 2 + c1[1] ** 2 + c1[2] ** 2)
        sz = math.sqrt(c2[0] ** 2 + c2[1] ** 2 + c2[2] ** 2)
        det = (
            m[0] * (m[5] * m[10] - m[6] * m[9])
            - m[1] * (m[4] * m[10] - m[6] * m[8])
            + m[2] * (m[4] * m[9] - m[5] * m[8])
        )
        if det < 0.0:
            sx = -sx
        if abs(sx) < 1e-12 or sy < 1e-12 or sz < 1e-12:
            raise InvalidValueError("matrix has a zero scale axis")
        r3 = (
            c0[0] / sx, c1[0] / sy, c2[0] / sz,
            c0[1] / sx, c1[1] / sy, c2[1] / sz,
            c0[2] / sx, c1[2] / sy, c2[2] / sz,
        )
        q = q_from_mat3(r3)
        e = quat_to_euler(q, "XYZ")
        tr = Transform(t, e, Vec3(sx, sy, sz), ZERO3, _baked=m)
        return tr

    # -- views -------------------------------------------------------------

    def matrix(self) -> tuple:
        """Row-major 4x4: T * P * R * S * P^-1."""
        if self._baked is not None:
            return self._baked
        t, q, s, p = self.translation, self.quaternion, self.scale, self.pivot
        r = q_to_mat3(q)
        l00, l01, l02 = r[0] * s[0], r[1] * s[1], r[2] * s[2]
        l10, l11, l12 = r[3] * s[0], r[4] * s[1], r[5] * s[2]
        l20, l21, l22 = r[6] * s[0], r[7] * s[1], r[8] * s[2]
        px, py, pz = p
        return (
            l00, l01, l02, t[0] + px - (l00 * px + l01 * py + l02 * pz),
            l10, l11, l12, t[1] + py - (l10 * px + l11 * py + l12 * pz),
            l20, l21, l22, t[2] + pz - (l20 * px + l21 * py + l22 * pz),
            0.0, 0.0, 0.0, 1.0,
        )

    def to_xform(self) -> Xform:
        """Pivot-baked (position, quaternion, scale) triple."""
        t, q, s, p = self.translation, self.quaternion, self.scale, self.pivot
        if p == ZERO3:
            return Xform(t, q, s)
        moved = q_rotate(q, (p[0] * s[0], p[1] * s[1], p[2] * s[2]))
        return Xform(
            Vec3(t[0] + p[0] - moved[0], t[1] + p[1] - moved[1], t[2] + p[2] - moved[2]),
            q,
            s,
        )

    def with_translation(self, t: Vec3) -> "Transform":
        return Transform(t, self.rotation, self.scale, self.pivot)

    def with_pivot(self, p: Vec3) -> "Transform":
        return Transform(self.translation, self.rotation, self.scale, p)

    def is_identity(self, tol: float = 0.0) -> bool:
        return mat_max_delta(self.matrix(), MAT4_IDENTITY) <= tol

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        e = self.rotation
        return {
            "t": [self.translation.x, self.translation.y, self.translation.z],
            "r": [e.x, e.y, e.z],
            "ro": e.order,
            "s": [self.scale.x, self.scale.y, self.scale.z],
            "p": [self.pivot.x, self.pivot.y, self.pivot.z],
        }

    @staticmethod
    def from_json(doc: dict) -> "Transform":
        from .errors import SchemaError

        if not isinstance(doc, dict):
            raise SchemaError("transform must be an object", "/")
        try:
            t = doc.get("t", [0.0, 0.0, 0.0])
            r = doc.get("r", [0.0, 0.0, 0.0])
            ro = doc.get("ro", "XYZ")
            s = doc.get("s", [1.0, 1.0, 1.0])
            p = doc.get("p", [0.0, 0.0, 0.0])
            return Transform(
                Vec3.of(*t),
                EulerRotation(float(r[0]), float(r[1]), float(r[2]), ro),
                Vec3.of(*s),
                Vec3.of(*p),
            )
        except (TypeError, ValueError, IndexError) as exc:
            raise SchemaError(f"bad transform: {exc}", "/") from exc


IDENTITY_TRANSFORM = Transform()


def compose(parent: Transform, child: Transform) -> Transform:
    """Transform mapping child-local space to the parent's parent space.

    Equals the 4x4 matrix product of the operands including pivots; the
    returned value carries that exact matrix.
    """
    if parent._baked is None and child._baked is None:
        # fast path: exact whenever the parent scale is uniform
        s = parent.scale
        if s[0] == s[1] == s[2]:
            xa = parent.to_xform()
            xb = child.to_xform()
            xc = xf_mul(xa, xb)
            e = quat_to_euler(xc.q, "XYZ")
            return Transform(xc.t, e, xc.s, ZERO3, _baked=xf_to_mat4(xc))
    return Transform.from_matrix(mat_mul(parent.matrix(), child.matrix()))
