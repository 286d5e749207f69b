"""Rotation algebra shared by every module: quaternions, MRPs and DCMs.

Conventions
-----------
* Quaternions are numpy arrays ``[x, y, z, s]`` (vector part first, scalar
  LAST) and represent frame rotations: ``q_to_dcm(q)`` is the direction
  cosine matrix that maps inertial components to body components.
* ``qmult`` composes so that ``q_to_dcm(qmult(a, b)) == q_to_dcm(a) @
  q_to_dcm(b)``, matching DCM multiplication order.
* MRPs use the tan(theta/4) scaling, ``p = v / (1 + s)``.

All functions accept a leading batch dimension (``(..., 4)`` quaternions,
``(..., 3)`` vectors) and are pure.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ShadowSingularity",
    "identity_quat",
    "qnormalize",
    "cross3",
    "qmult",
    "qconj",
    "sign_align",
    "omega_matrix",
    "skew",
    "q_to_dcm",
    "dcm_to_q",
    "q_to_mrp",
    "mrp_to_q",
    "mrp_to_dcm",
    "rotvec_to_quat",
    "rotvec_rotate",
    "rotate",
    "quat_angle",
]


class ShadowSingularity(ValueError):
    """MRP conversion requested too close to the 360 deg shadow point."""


def identity_quat() -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 1.0])


def qnormalize(q: np.ndarray) -> np.ndarray:
    """Return q scaled to unit norm."""
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product on the last axis, without np.cross's axis plumbing."""
    ax, ay, az = a[..., 0], a[..., 1], a[..., 2]
    bx, by, bz = b[..., 0], b[..., 1], b[..., 2]
    out = np.empty(np.broadcast(ax, bx).shape + (3,))
    out[..., 0] = ay * bz - az * by
    out[..., 1] = az * bx - ax * bz
    out[..., 2] = ax * by - ay * bx
    return out


def qmult(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Compose two frame-rotation quaternions (result renormalized).

    The product is ordered so the composed DCM is ``C(a) @ C(b)``: ``a``
    is the additional rotation applied after ``b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    av, as_ = a[..., :3], a[..., 3:4]
    bv, bs = b[..., :3], b[..., 3:4]
    v = as_ * bv + bs * av - cross3(av, bv)
    s = as_ * bs - np.sum(av * bv, axis=-1, keepdims=True)
    return qnormalize(np.concatenate([v, s], axis=-1))


def qconj(q: np.ndarray) -> np.ndarray:
    """Inverse rotation: negate the vector part."""
    q = np.asarray(q, dtype=float)
    return np.concatenate([-q[..., :3], q[..., 3:4]], axis=-1)


def sign_align(q: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Return q or -q, whichever has non-negative dot product with ref."""
    q = np.asarray(q, dtype=float)
    d = np.sum(q * ref, axis=-1, keepdims=True)
    return np.where(d < 0.0, -q, q)


def omega_matrix(w: np.ndarray) -> np.ndarray:
    """4x4 kinematics operator: qdot = 0.5 * omega_matrix(w) @ q.

    Laid out for scalar-last storage; antisymmetric by construction, and
    validated against DCM propagation (Cdot = -[w]x C).
    """
    wx, wy, wz = np.asarray(w, dtype=float)
    return np.array(
        [
            [0.0, wz, -wy, wx],
            [-wz, 0.0, wx, wy],
            [wy, -wx, 0.0, wz],
            [-wx, -wy, -wz, 0.0],
        ]
    )


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == cross(v, u). Batched."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    out[..., 0, 1] = -z
    out[..., 0, 2] = y
    out[..., 1, 0] = z
    out[..., 1, 2] = -x
    out[..., 2, 0] = -y
    out[..., 2, 1] = x
    return out


def q_to_dcm(q: np.ndarray) -> np.ndarray:
    """Direction cosine matrix of a unit quaternion (inertial -> body)."""
    q = qnormalize(q)
    v, s = q[..., :3], q[..., 3]
    vv = v[..., :, None] * v[..., None, :]
    eye = np.zeros(q.shape[:-1] + (3, 3))
    eye[..., 0, 0] = eye[..., 1, 1] = eye[..., 2, 2] = 1.0
    ss = (s * s - np.sum(v * v, axis=-1))[..., None, None]
    return ss * eye + 2.0 * vv - 2.0 * s[..., None, None] * skew(v)


def dcm_to_q(c: np.ndarray) -> np.ndarray:
    """Quaternion of a proper orthonormal 3x3 matrix (Shepperd's method).

    Sign convention: scalar part non-negative. Not batched.
    """
    c = np.asarray(c, dtype=float)
    tr = np.trace(c)
    # squared components, up to scale; pick the largest for stability
    cand = np.array([1.0 + 2.0 * c[0, 0] - tr, 1.0 + 2.0 * c[1, 1] - tr, 1.0 + 2.0 * c[2, 2] - tr, 1.0 + tr])
    i = int(np.argmax(cand))
    if i == 3:
        s = 0.5 * np.sqrt(cand[3])
        v = np.array([c[1, 2] - c[2, 1], c[2, 0] - c[0, 2], c[0, 1] - c[1, 0]]) / (4.0 * s)
    elif i == 0:
        vx = 0.5 * np.sqrt(cand[0])
        f = 1.0 / (4.0 * vx)
        s = (c[1, 2] - c[2, 1]) * f
        v = np.array([vx, (c[0, 1] + c[1, 0]) * f, (c[0, 2] + c[2, 0]) * f])
    elif i == 1:
        vy = 0.5 * np.sqrt(cand[1])
        f = 1.0 / (4.0 * vy)
        s = (c[2, 0] - c[0, 2]) * f
        v = np.array([(c[0, 1] + c[1, 0]) * f, vy, (c[1, 2] + c[2, 1]) * f])
    else:
        vz = 0.5 * np.sqrt(cand[2])
        f = 1.0 / (4.0 * vz)
        s = (c[0, 1] - c[1, 0]) * f
        v = np.array([(c[0, 2] + c[2, 0]) * f, (c[1, 2] + c[2, 1]) * f, vz])
    q = qnormalize(np.array([v[0], v[1], v[2], s]))
    return -q if q[3] < 0.0 else q


def q_to_mrp(q: np.ndarray) -> np.ndarray:
    """Modified Rodrigues parameters p = v / (1 + s), tan(theta/4) scaled.

    Raises ShadowSingularity when the scalar part is at or below -1 + 1e-9
    (caller should flip the quaternion sign first).
    """
    q = np.asarray(q, dtype=float)
    s = q[..., 3:4]
    if np.any(s <= -1.0 + 1e-9):
        raise ShadowSingularity("quaternion scalar part too close to -1 for MRP conversion")
    return q[..., :3] / (1.0 + s)


def mrp_to_q(p: np.ndarray) -> np.ndarray:
    """Inverse of q_to_mrp (returns the short-rotation quaternion)."""
    p = np.asarray(p, dtype=float)
    n2 = np.sum(p * p, axis=-1, keepdims=True)
    return np.concatenate([2.0 * p, 1.0 - n2], axis=-1) / (1.0 + n2)


def mrp_to_dcm(p: np.ndarray) -> np.ndarray:
    return q_to_dcm(mrp_to_q(p))


def rotvec_to_quat(w: np.ndarray) -> np.ndarray:
    """Quaternion of a rotation vector (axis * angle, rad). Batched."""
    w = np.asarray(w, dtype=float)
    angle = np.linalg.norm(w, axis=-1, keepdims=True)
    half = 0.5 * angle
    # sin(x)/x, safe at zero
    small = angle < 1e-12
    k = np.where(small, 0.5, np.sin(half) / np.where(small, 1.0, angle))
    return np.concatenate([k * w, np.cos(half)], axis=-1)


def rotvec_rotate(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Actively rotate vector(s) v by the rotation vector w (Rodrigues)."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(w, axis=-1, keepdims=True)
    small = angle < 1e-12
    axis = w / np.where(small, 1.0, angle)
    c = np.cos(angle)
    s = np.sin(angle)
    return v * c + cross3(axis, v) * s + axis * np.sum(axis * v, axis=-1, keepdims=True) * (1.0 - c)


def rotate(q: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Apply the frame rotation of q to vector u: q_to_dcm(q) @ u."""
    return np.squeeze(q_to_dcm(q) @ np.asarray(u, dtype=float)[..., None], axis=-1)


def quat_angle(a: np.ndarray, b: np.ndarray) -> float | np.ndarray:
    """Rotation angle (rad) between two unit quaternions, sign-insensitive.

    Uses atan2 on the error quaternion, which stays accurate for tiny
    angles where acos of the dot product floors out near 3e-8.
    """
    dq = qmult(a, qconj(b))
    return 2.0 * np.arctan2(np.linalg.norm(dq[..., :3], axis=-1), np.abs(dq[..., 3]))
