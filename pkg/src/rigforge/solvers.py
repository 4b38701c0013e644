"""Closed-form and numeric kinematics: two-bone IK, stretch, elbow lock,
curve arc length, spline chains, twist distribution, driven keys.

Everything here is a pure function of its arguments; the rig graph wraps
these in node kinds, and the compiler bakes rest-pose corrections around
them so default poses reproduce the skeleton exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

from .errors import (
    DegenerateCurveError,
    DegeneratePoleError,
    InvalidValueError,
    NonPositiveRestLengthError,
    SolverError,
    ZeroLengthTargetError,
)
from .math3d import Quat, Vec3, q_from_mat3, q_mul, q_rotate, vlerp

# ---------------------------------------------------------------------------
# Two-bone IK
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoBoneChain:
    """Upper/lower segment lengths with a bend-plane hint point."""

    root: Vec3
    len_a: float
    len_b: float
    pole: Vec3

    def __post_init__(self):
        if self.len_a <= 0.0 or self.len_b <= 0.0:
            raise InvalidValueError("segment lengths must be positive")


class TwoBoneSolution(NamedTuple):
    upper_rotation: Quat  # frame of the upper segment (+X down the bone)
    lower_rotation: Quat  # frame of the lower segment
    interior_deg: float  # angle between the segments at the mid joint
    mid: Vec3
    effector: Vec3


def _frame_quat(x_axis: Vec3, z_hint: Vec3) -> Quat:
    """Right-handed frame with +X along ``x_axis`` and +Z near ``z_hint``."""
    x = x_axis.normalized()
    z = z_hint - x * z_hint.dot(x)
    zl = z.length()
    if zl < 1e-12:
        raise DegeneratePoleError("frame hint collinear with aim axis")
    z = z * (1.0 / zl)
    y = z.cross(x)
    return q_from_mat3((x[0], y[0], z[0], x[1], y[1], z[1], x[2], y[2], z[2]))


def solve_two_bone_ik(chain: TwoBoneChain, target: Vec3) -> TwoBoneSolution:
    """Analytic two-segment solve.

    Reachable targets are hit exactly; beyond-reach targets straighten the
    chain toward the target; inside the inner annulus the chain folds fully.
    The mid joint always lands on the pole side of the root-target line.
    """
    root, a, b, pole = chain.root, chain.len_a, chain.len_b, chain.pole
    d = Vec3(*target) - root
    dist = d.length()
    if dist < 1e-9:
        raise ZeroLengthTargetError("target coincides with the chain root")
    dir_ = d * (1.0 / dist)

    pole_vec = Vec3(*pole) - root
    in_plane = pole_vec - dir_ * pole_vec.dot(dir_)
    ipl = in_plane.length()
    if ipl < 1e-9 * max(1.0, pole_vec.length()):
        raise DegeneratePoleError("pole point lies on the root-target line")
    side = in_plane * (1.0 / ipl)
    normal = dir_.cross(side)  # unit: dir_ and side orthonormal

    lo, hi = abs(a - b), a + b
    c = min(max(dist, lo), hi)
    if dist >= hi:
        interior = 180.0  # exactly straight, no acos roundoff
    elif dist <= lo:
        interior = 0.0  # fully folded
    else:
        cos_interior = (a * a + b * b - c * c) / (2.0 * a * b)
        cos_interior = max(-1.0, min(1.0, cos_interior))
        interior = math.degrees(math.acos(cos_interior))
    cos_alpha = (a * a + c * c - b * b) / (2.0 * a * c)
    cos_alpha = max(-1.0, min(1.0, cos_alpha))
    sin_alpha = math.sqrt(max(0.0, 1.0 - cos_alpha * cos_alpha))

    mid = root + dir_ * (a * cos_alpha) + side * (a * sin_alpha)
    effector = Vec3(*target) if lo <= dist <= hi else root + dir_ * c

    upper = _frame_quat(mid - root, normal)
    lower_dir = effector - mid
    if lower_dir.length() < 1e-12:
        lower_dir = dir_
    lower = _frame_quat(lower_dir, normal)
    return TwoBoneSolution(upper, lower, interior, mid, effector)


# ---------------------------------------------------------------------------
# Stretch
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StretchInputs:
    current_length: float
    rest_length: float


def stretch_factor(s: StretchInputs) -> float:
    """Current length over rest length."""
    if s.rest_length <= 0.0:
        raise NonPositiveRestLengthError(
            f"rest length must be positive, got {s.rest_length!r}"
        )
    return s.current_length / s.rest_length


def limb_stretch_scales(x: float, a: float, b: float) -> Tuple[float, float]:
    """Uniform segment scales making a straight chain span ``x`` when pulled
    past full reach; identity inside reach."""
    if a <= 0.0 or b <= 0.0:
        raise NonPositiveRestLengthError("segment lengths must be positive")
    if x < 0.0:
        raise InvalidValueError("span must be nonnegative")
    full = a + b
    if x <= full:
        return (1.0, 1.0)
    s = x / full
    return (s, s)


def solve_elbow_lock(
    root: Vec3,
    elbow_ctrl: Vec3,
    wrist_target: Vec3,
    lock_weight: float,
    chain: TwoBoneChain,
) -> Tuple[float, float, Vec3]:
    """Blend segment lengths toward the elbow controller distances.

    At weight 1 the mid joint pins to the controller exactly; at weight 0
    this is the plain two-bone solve.  Returns the effective lengths and
    the solved mid-joint position.
    """
    if not 0.0 <= lock_weight <= 1.0:
        raise InvalidValueError("lock weight must be in [0, 1]")
    root = Vec3(*root)
    elbow_ctrl = Vec3(*elbow_ctrl)
    wrist_target = Vec3(*wrist_target)
    da = (elbow_ctrl - root).length()
    db = (wrist_target - elbow_ctrl).length()
    if lock_weight == 1.0 and (da < 1e-9 or db < 1e-9):
        raise SolverError("elbow controller coincides with a chain end")
    len_a = chain.len_a + (da - chain.len_a) * lock_weight
    len_b = chain.len_b + (db - chain.len_b) * lock_weight
    len_a = max(len_a, 1e-9)
    len_b = max(len_b, 1e-9)
    locked = TwoBoneChain(root, len_a, len_b, elbow_ctrl)
    sol = solve_two_bone_ik(locked, wrist_target)
    return (len_a, len_b, sol.mid)


# ---------------------------------------------------------------------------
# Cubic Bezier curves and arc length
# ---------------------------------------------------------------------------

# 8-point Gauss-Legendre nodes/weights on [-1, 1]
_GL8_X = (
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
    0.7966664774136267, 0.9602898564975363,
)
_GL8_W = (
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763,
)

_GL4_X = (-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526)
_GL4_W = (0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538)


class CubicBezier(NamedTuple):
    p0: Vec3
    p1: Vec3
    p2: Vec3
    p3: Vec3

    def point(self, t: float) -> Vec3:
        u = 1.0 - t
        a = u * u * u
        b = 3.0 * u * u * t
        c = 3.0 * u * t * t
        d = t * t * t
        p0, p1, p2, p3 = self
        return Vec3(
            a * p0[0] + b * p1[0] + c * p2[0] + d * p3[0],
            a * p0[1] + b * p1[1] + c * p2[1] + d * p3[1],
            a * p0[2] + b * p1[2] + c * p2[2] + d * p3[2],
        )

    def derivative(self, t: float) -> Vec3:
        u = 1.0 - t
        a = 3.0 * u * u
        b = 6.0 * u * t
        c = 3.0 * t * t
        p0, p1, p2, p3 = self
        return Vec3(
            a * (p1[0] - p0[0]) + b * (p2[0] - p1[0]) + c * (p3[0] - p2[0]),
            a * (p1[1] - p0[1]) + b * (p2[1] - p1[1]) + c * (p3[1] - p2[1]),
            a * (p1[2] - p0[2]) + b * (p2[2] - p1[2]) + c * (p3[2] - p2[2]),
        )

    def speed(self, t: float) -> float:
        d = self.derivative(t)
        return math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])


def _gl8_segment(curve: CubicBezier, t0: float, t1: float) -> float:
    half = 0.5 * (t1 - t0)
    mid = 0.5 * (t0 + t1)
    total = 0.0
    for x, w in zip(_GL8_X, _GL8_W):
        total += w * curve.speed(mid + half * x)
    return total * half


def arc_length(curve: CubicBezier, t0: float = 0.0, t1: float = 1.0, tol: float = 1e-10) -> float:
    """Arc length of the curve between parameters t0 and t1.

    Adaptive Gauss-Legendre; relative accuracy well under 1e-7 even near
    cusps.
    """
    if not (0.0 <= t0 <= t1 <= 1.0):
        raise InvalidValueError("need 0 <= t0 <= t1 <= 1")

    def recurse(a: float, b: float, whole: float, depth: int) -> float:
        m = 0.5 * (a + b)
        left = _gl8_segment(curve, a, m)
        right = _gl8_segment(curve, m, b)
        if depth <= 0 or abs(left + right - whole) <= tol * max(1.0, abs(whole)):
            return left + right
        return recurse(a, m, left, depth - 1) + recurse(m, b, right, depth - 1)

    if t0 == t1:
        return 0.0
    whole = _gl8_segment(curve, t0, t1)
    return recurse(t0, t1, whole, 24)


class ArcTable:
    """Fixed-resolution cumulative arc-length table for fast repeated
    position-at-length queries during rig evaluation."""

    __slots__ = ("curve", "n", "ts", "cum", "total", "_speed", "_newton")

    def __init__(self, curve: CubicBezier, segments: int = 24, newton: int = 2):
        self.curve = curve
        self.n = segments
        self._newton = newton
        # speed as a closed-form polynomial norm (no tuple churn in the loop)
        p0, p1, p2, p3 = curve
        d0x, d0y, d0z = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
        d1x, d1y, d1z = p2[0] - p1[0], p2[1] - p1[1], p2[2] - p1[2]
        d2x, d2y, d2z = p3[0] - p2[0], p3[1] - p2[1], p3[2] - p2[2]
        ax, ay, az = (
            3.0 * (d0x - 2.0 * d1x + d2x),
            3.0 * (d0y - 2.0 * d1y + d2y),
            3.0 * (d0z - 2.0 * d1z + d2z),
        )
        bx, by, bz = 6.0 * (d1x - d0x), 6.0 * (d1y - d0y), 6.0 * (d1z - d0z)
        cx, cy, cz = 3.0 * d0x, 3.0 * d0y, 3.0 * d0z
        sqrt = math.sqrt

        def speed(t: float) -> float:
            vx = (ax * t + bx) * t + cx
            vy = (ay * t + by) * t + cy
            vz = (az * t + bz) * t + cz
            return sqrt(vx * vx + vy * vy + vz * vz)

        self._speed = speed
        inv = 1.0 / segments
        self.ts = [i * inv for i in range(segments + 1)]
        cum = [0.0]
        acc = 0.0
        half = 0.5 * inv
        g0, g1, g2, g3 = (x * half for x in _GL4_X)
        w0, w1, w2, w3 = _GL4_W
        for i in range(segments):
            mid = (i + 0.5) * inv
            seg = (
                w0 * speed(mid + g0)
                + w1 * speed(mid + g1)
                + w2 * speed(mid + g2)
                + w3 * speed(mid + g3)
            )
            acc += seg * half
            cum.append(acc)
        self.cum = cum
        self.total = acc

    def param_at_length(self, s: float) -> float:
        if s <= 0.0:
            return 0.0
        if s >= self.total:
            return 1.0
        cum = self.cum
        lo, hi = 0, self.n
        while hi - lo > 1:
            midi = (lo + hi) // 2
            if cum[midi] <= s:
                lo = midi
            else:
                hi = midi
        seg_len = cum[hi] - cum[lo]
        t = self.ts[lo]
        if seg_len <= 0.0:
            return t
        frac = (s - cum[lo]) / seg_len
        t += (self.ts[hi] - self.ts[lo]) * frac
        # Newton refinement against the true speed
        speed = self._speed
        for _ in range(self._newton):
            err = self._length_to(t) - s
            v = speed(t)
            if v < 1e-12:
                break
            t -= err / v
            t = min(1.0, max(0.0, t))
        return t

    def _length_to(self, t: float) -> float:
        cum = self.cum
        ts = self.ts
        idx = min(int(t * self.n), self.n - 1)
        if t <= ts[idx]:
            idx = max(0, idx - 1)
        base = cum[idx]
        a = ts[idx]
        half = 0.5 * (t - a)
        mid = 0.5 * (t + a)
        speed = self._speed
        return base + half * (
            _GL4_W[0] * speed(mid + half * _GL4_X[0])
            + _GL4_W[1] * speed(mid + half * _GL4_X[1])
            + _GL4_W[2] * speed(mid + half * _GL4_X[2])
            + _GL4_W[3] * speed(mid + half * _GL4_X[3])
        )


# ---------------------------------------------------------------------------
# Spline chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplineChain:
    """Joint chain bound to a guide curve.

    ``rest_lengths[i]`` is the rest distance from joint ``i-1`` to joint
    ``i``; the first entry is the offset of joint 0 from the curve start
    (normally zero).
    """

    rest_lengths: Sequence[float]
    curve: CubicBezier
    twist_deg: float = 0.0
    stretch: bool = True
    up_hint: Vec3 = Vec3(0.0, 0.0, 1.0)

    def __post_init__(self):
        if len(self.rest_lengths) < 2:
            raise InvalidValueError("spline chains need at least two joints")


class SplineJoint(NamedTuple):
    position: Vec3
    rotation: Quat
    scale: float


def solve_spline_ik(chain: SplineChain) -> List[SplineJoint]:
    """Place joints along the curve by arc length.

    With stretch on, each joint sits at (cumulative rest length times the
    current/rest ratio) and reports that ratio as its scale; with stretch off, positions
    clamp at the curve end.  Aim axes follow the curve tangent; roll ramps
    linearly to the requested twist.
    """
    table = ArcTable(chain.curve)
    total_cur = table.total
    if total_cur < 1e-9:
        raise DegenerateCurveError("guide curve has zero length")
    cums = []
    acc = 0.0
    for seg in chain.rest_lengths:
        acc += seg
        cums.append(acc)
    total_rest = acc
    if total_rest <= 0.0:
        raise DegenerateCurveError("chain rest length is zero")
    s_f = total_cur / total_rest
    out: List[SplineJoint] = []
    n = len(cums)
    for i, cum in enumerate(cums):
        if chain.stretch:
            s = cum * s_f
            scale = s_f
        else:
            s = min(cum, total_cur)
            scale = 1.0
        t = table.param_at_length(s)
        pos = chain.curve.point(t)
        tangent = chain.curve.derivative(t)
        if tangent.length() < 1e-12:
            tangent = chain.curve.derivative(min(1.0, t + 1e-4))
        frame = _frame_quat(tangent, chain.up_hint)
        fraction = cum / total_rest
        roll = chain.twist_deg * fraction
        if roll != 0.0:
            half = math.radians(roll) * 0.5
            frame = q_mul(frame, Quat(math.cos(half), math.sin(half), 0.0, 0.0))
        out.append(SplineJoint(pos, frame, scale))
    return out


def distribute_twist(n_subjoints: int, total_twist_deg: float) -> List[float]:
    """Linear ramp: sub-joint k of n carries k/n of the total twist."""
    if n_subjoints < 1:
        raise InvalidValueError("need at least one sub-joint")
    return [total_twist_deg * (k + 1) / n_subjoints for k in range(n_subjoints)]


# ---------------------------------------------------------------------------
# Driven keys
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DrivenKey:
    """Keyed driver->driven mapping; exact at keys, clamped outside."""

    keys: Tuple[Tuple[float, float], ...]
    interpolation: str = "linear"  # linear | smooth

    def __post_init__(self):
        if len(self.keys) < 2:
            raise InvalidValueError("driven keys need at least two keys")
        drivers = [k[0] for k in self.keys]
        if any(b <= a for a, b in zip(drivers, drivers[1:])):
            raise InvalidValueError("key drivers must be strictly increasing")
        if self.interpolation not in ("linear", "smooth"):
            raise InvalidValueError(f"unknown interpolation {self.interpolation!r}")
        object.__setattr__(self, "keys", tuple((float(a), float(b)) for a, b in self.keys))


def eval_driven_key(dk: DrivenKey, driver: float) -> float:
    keys = dk.keys
    if driver <= keys[0][0]:
        return keys[0][1]
    if driver >= keys[-1][0]:
        return keys[-1][1]
    lo, hi = 0, len(keys) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if keys[mid][0] <= driver:
            lo = mid
        else:
            hi = mid
    d0, v0 = keys[lo]
    d1, v1 = keys[hi]
    if driver == d0:
        return v0
    t = (driver - d0) / (d1 - d0)
    if dk.interpolation == "smooth":
        t = t * t * (3.0 - 2.0 * t)
    return v0 + (v1 - v0) * t


# ---------------------------------------------------------------------------
# FK/IK matching geometry
# ---------------------------------------------------------------------------


def pole_point_from_chain(
    root: Vec3, mid: Vec3, effector: Vec3, distance: float
) -> Optional[Vec3]:
    """Point in the bend plane suitable as a pole target.

    Returns None for straight chains, where any point in the normal plane
    is equally valid.
    """
    root, mid, effector = Vec3(*root), Vec3(*mid), Vec3(*effector)
    axis = effector - root
    al = axis.length()
    if al < 1e-9:
        offset = mid - root
        if offset.length() < 1e-9:
            return None
        return mid + offset.normalized() * distance
    axis = axis * (1.0 / al)
    to_mid = mid - root
    perp = to_mid - axis * to_mid.dot(axis)
    pl = perp.length()
    if pl < 1e-7 * max(1.0, al):
        return None
    return mid + perp * (distance / pl)
