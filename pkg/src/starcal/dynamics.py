"""Ground-truth rigid-body propagation.

The truth state is (attitude quaternion, body rates, constant gyro bias,
constant tracker misalignment).  Rates follow Euler's equations with an
optional linear damping torque that switches on at a configured time;
attitude follows quaternion kinematics.  Both are integrated jointly with
RK4 and the quaternion is renormalized each step.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .rotations import cross3, qnormalize

__all__ = [
    "SingularInertia",
    "TruthState",
    "TorqueProfile",
    "check_inertia",
    "omega_dot",
    "propagate_truth",
    "kinetic_energy",
    "momentum_norm",
]


class SingularInertia(ValueError):
    """Inertia matrix is not symmetric positive definite."""


def check_inertia(j: np.ndarray) -> np.ndarray:
    """Validate and return a 3x3 SPD inertia matrix (kg m^2)."""
    j = np.asarray(j, dtype=float)
    if j.shape != (3, 3):
        raise SingularInertia(f"inertia must be 3x3, got {j.shape}")
    if not np.allclose(j, j.T, atol=1e-12):
        raise SingularInertia("inertia matrix must be symmetric")
    if np.min(np.linalg.eigvalsh(j)) <= 0.0:
        raise SingularInertia("inertia matrix must be positive definite")
    return j


@dataclass(frozen=True)
class TruthState:
    """True spacecraft state.  bias and mis are constant under propagation."""

    q: np.ndarray          # attitude quaternion, inertial -> body, scalar last
    omega: np.ndarray      # body rates, rad/s
    bias: np.ndarray       # gyro bias, rad/s
    mis: np.ndarray        # tracker misalignment rotation vector, rad


@dataclass(frozen=True)
class TorqueProfile:
    """External control torque plus a hard-switched damping torque."""

    m_c: np.ndarray = field(default_factory=lambda: np.zeros(3))   # N m
    damping: float = 0.0       # damping coefficient D, torque = -D * omega
    t_damp: float = np.inf     # activation time, s

    def damping_at(self, t: float) -> float:
        return self.damping if t >= self.t_damp else 0.0


def omega_dot(
    omega: np.ndarray,
    j: np.ndarray,
    m_c: np.ndarray | None = None,
    damping: float = 0.0,
) -> np.ndarray:
    """Euler's equations: J^-1 (M_c - omega x (J omega) - D omega)."""
    omega = np.asarray(omega, dtype=float)
    j = np.asarray(j, dtype=float)
    torque = -cross3(omega, j @ omega) - damping * omega
    if m_c is not None:
        torque = torque + m_c
    try:
        return np.linalg.solve(j, torque)
    except np.linalg.LinAlgError as exc:
        raise SingularInertia("inertia matrix is singular") from exc


def _qdot(q: np.ndarray, omega: np.ndarray) -> np.ndarray:
    # 0.5 * Omega(w) @ q without building the 4x4 (works batched)
    v, s = q[..., :3], q[..., 3:4]
    dv = 0.5 * (s * omega - cross3(omega, v))
    ds = -0.5 * np.sum(omega * v, axis=-1, keepdims=True)
    return np.concatenate([dv, ds], axis=-1)


def propagate_truth(
    state: TruthState,
    j: np.ndarray,
    torque: TorqueProfile,
    t: float,
    dt: float,
) -> TruthState:
    """One joint RK4 step of the attitude/rate dynamics from time t.

    The damping switch is evaluated at each RK4 stage time, so steps that
    straddle the activation instant see it on the trailing stage only.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    j_inv = np.linalg.inv(j)

    def deriv(q, w, ts):
        d = torque.damping_at(ts)
        wd = j_inv @ (torque.m_c - cross3(w, j @ w) - d * w)
        return _qdot(q, w), wd

    q0, w0 = state.q, state.omega
    k1q, k1w = deriv(q0, w0, t)
    k2q, k2w = deriv(q0 + 0.5 * dt * k1q, w0 + 0.5 * dt * k1w, t + 0.5 * dt)
    k3q, k3w = deriv(q0 + 0.5 * dt * k2q, w0 + 0.5 * dt * k2w, t + 0.5 * dt)
    k4q, k4w = deriv(q0 + dt * k3q, w0 + dt * k3w, t + dt)

    q = qnormalize(q0 + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q))
    w = w0 + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    return replace(state, q=q, omega=w)


def kinetic_energy(omega: np.ndarray, j: np.ndarray) -> float:
    return 0.5 * float(np.asarray(omega) @ np.asarray(j) @ np.asarray(omega))


def momentum_norm(omega: np.ndarray, j: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(j) @ np.asarray(omega)))
