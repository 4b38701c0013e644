"""Independent numeric oracles used across the test suite.

Everything here is built from textbook definitions with numpy, on purpose
sharing no code with the library under test: sequential axis rotation
matrices, TRS-with-pivot 4x4 assembly, dense-sampled curve lengths, and a
brute-force two-bone solver based on sweeping the elbow angle.
"""

from __future__ import annotations

import math

import numpy as np


def rot_x(deg: float) -> np.ndarray:
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def rot_y(deg: float) -> np.ndarray:
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def rot_z(deg: float) -> np.ndarray:
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


_AXIS_ROT = {"X": rot_x, "Y": rot_y, "Z": rot_z}


def euler_matrix(angles_deg, order: str) -> np.ndarray:
    """Sequential fixed-axis rotations: first letter applied first."""
    by_axis = {"X": angles_deg[0], "Y": angles_deg[1], "Z": angles_deg[2]}
    m = np.eye(3)
    for letter in order:
        m = _AXIS_ROT[letter](by_axis[letter]) @ m
    return m


def trs_pivot_matrix(t, r_deg, order, s, p) -> np.ndarray:
    """4x4 of translate * pivot * rotate * scale * pivot^-1."""
    m = np.eye(4)
    m[:3, :3] = euler_matrix(r_deg, order) @ np.diag(s)
    tp = np.eye(4)
    tp[:3, 3] = t
    pp = np.eye(4)
    pp[:3, 3] = p
    pn = np.eye(4)
    pn[:3, 3] = [-p[0], -p[1], -p[2]]
    return tp @ pp @ m @ pn


def transform_matrix(tr) -> np.ndarray:
    """rigforge Transform -> oracle matrix, via its authored fields only."""
    e = tr.rotation
    return trs_pivot_matrix(
        tuple(tr.translation),
        (e.x, e.y, e.z),
        e.order,
        tuple(tr.scale),
        tuple(tr.pivot),
    )


def as_np(mat16) -> np.ndarray:
    return np.array(mat16, dtype=float).reshape(4, 4)


def max_entry_delta(mat16, expected: np.ndarray) -> float:
    return float(np.abs(as_np(mat16) - expected).max())


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


def bezier_point(cvs, t: float) -> np.ndarray:
    p0, p1, p2, p3 = (np.asarray(c, dtype=float) for c in cvs)
    u = 1.0 - t
    return (
        u * u * u * p0
        + 3.0 * u * u * t * p1
        + 3.0 * u * t * t * p2
        + t * t * t * p3
    )


def polyline_arc_length(cvs, t0: float = 0.0, t1: float = 1.0, n: int = 1_000_000) -> float:
    """Dense polyline length; the reference for arc-length accuracy checks."""
    ts = np.linspace(t0, t1, n + 1)
    p0, p1, p2, p3 = (np.asarray(c, dtype=float) for c in cvs)
    u = 1.0 - ts
    pts = (
        (u**3)[:, None] * p0
        + (3 * u**2 * ts)[:, None] * p1
        + (3 * u * ts**2)[:, None] * p2
        + (ts**3)[:, None] * p3
    )
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def polyline_point_at_length(cvs, s: float, n: int = 400_000) -> np.ndarray:
    """Independent arc-length reparameterization: position at arc length s,
    by interpolating a dense cumulative polyline table."""
    ts = np.linspace(0.0, 1.0, n + 1)
    p0, p1, p2, p3 = (np.asarray(c, dtype=float) for c in cvs)
    u = 1.0 - ts
    pts = (
        (u**3)[:, None] * p0
        + (3 * u**2 * ts)[:, None] * p1
        + (3 * u * ts**2)[:, None] * p2
        + (ts**3)[:, None] * p3
    )
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = min(max(s, 0.0), float(cum[-1]))
    idx = int(np.searchsorted(cum, s)) - 1
    idx = max(0, min(idx, n - 1))
    span = cum[idx + 1] - cum[idx]
    frac = 0.0 if span <= 0 else (s - cum[idx]) / span
    return pts[idx] * (1 - frac) + pts[idx + 1] * frac


# ---------------------------------------------------------------------------
# Two-bone IK
# ---------------------------------------------------------------------------


def sweep_two_bone_elbow_angle(len_a: float, len_b: float, reach: float, steps: int = 20000) -> float:
    """Interior elbow angle (degrees) minimizing |effector - target| for a
    planar two-segment chain, found by brute-force sweep plus refinement."""

    def effector_dist(angle_deg):
        a = math.radians(angle_deg)
        # chain in a plane: root at origin, elbow at (len_a, 0); interior
        # angle `a` between the segments
        ex = len_a - len_b * math.cos(a)
        ey = len_b * math.sin(a)
        return abs(math.hypot(ex, ey) - reach)

    best = min(np.linspace(0.0, 180.0, steps), key=effector_dist)
    lo, hi = max(0.0, best - 0.05), min(180.0, best + 0.05)
    fine = min(np.linspace(lo, hi, 20000), key=effector_dist)
    return float(fine)


def fk_chain_positions(root, upper_dir, len_a, elbow_axis, interior_deg, len_b):
    """Forward-kinematics recomputation: place elbow/effector from the solved
    upper direction and interior angle."""
    root = np.asarray(root, dtype=float)
    upper_dir = np.asarray(upper_dir, dtype=float)
    elbow = root + upper_dir * len_a
    axis = np.asarray(elbow_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    a = math.radians(180.0 - interior_deg)
    c, s = math.cos(a), math.sin(a)
    k = axis
    d = upper_dir
    rotated = d * c + np.cross(k, d) * s + k * np.dot(k, d) * (1 - c)
    effector = elbow + rotated * len_b
    return elbow, effector
