"""Quaternion and rotation-vector helpers.

Quaternions are unit, scalar-first (w, x, y, z). Rotation increments are
world-frame tangent vectors applied on the left: R <- exp([w]x) R.
"""

import numpy as np


def quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q)


def quat_multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_to_matrix(q):
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    return np.array([
        [1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)],
        [2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)],
        [2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)],
    ])


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < 1e-300:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    s = np.sin(half) / n
    return np.array([np.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_from_rotvec(w):
    """Exponential map: rotation vector (axis * angle) -> quaternion."""
    w = np.asarray(w, dtype=np.float64)
    angle = np.linalg.norm(w)
    if angle < 1e-12:
        # first-order expansion keeps the map smooth through zero
        q = np.array([1.0, 0.5 * w[0], 0.5 * w[1], 0.5 * w[2]])
        return quat_normalize(q)
    return quat_from_axis_angle(w / angle, angle)


def apply_tangent(q, w):
    """Left-apply a world-frame tangent increment and renormalize.

    A zero increment returns q bit-unchanged so zero gradients are exact
    fixed points."""
    w = np.asarray(w, dtype=np.float64)
    if w[0] == 0.0 and w[1] == 0.0 and w[2] == 0.0:
        return np.array(q, dtype=np.float64)
    return quat_normalize(quat_multiply(quat_from_rotvec(w), q))


def axis_angle_matrix(axis, angle):
    """Rodrigues rotation about a unit axis."""
    ax, ay, az = axis
    c, s = np.cos(angle), np.sin(angle)
    c1 = 1.0 - c
    return np.array([
        [c + ax * ax * c1, ax * ay * c1 - az * s, ax * az * c1 + ay * s],
        [ay * ax * c1 + az * s, c + ay * ay * c1, ay * az * c1 - ax * s],
        [az * ax * c1 - ay * s, az * ay * c1 + ax * s, c + az * az * c1],
    ])


def rotation_between(a, b):
    """Quaternion of the minimal rotation taking unit vector a to unit vector b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cross = np.cross(a, b)
    s = np.linalg.norm(cross)
    c = float(np.dot(a, b))
    if s < 1e-12:
        if c > 0.0:
            return np.array([1.0, 0.0, 0.0, 0.0])
        # antiparallel: rotate pi about any axis orthogonal to a
        perp = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-6:
            perp = np.cross(a, [0.0, 1.0, 0.0])
        return quat_from_axis_angle(perp / np.linalg.norm(perp), np.pi)
    return quat_from_axis_angle(cross / s, np.arctan2(s, c))


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def orthonormal_tangents(n):
    """Two unit vectors completing a right-handed frame with unit n."""
    n = np.asarray(n, dtype=np.float64)
    helper = np.zeros(3)
    helper[np.argmin(np.abs(n))] = 1.0
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2
