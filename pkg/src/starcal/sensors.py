"""Star tracker and gyro measurement synthesis plus the TRIAD solution.

Both trackers share one rigid mounting offset: the misalignment rotation
vector actively rotates every measured direction before noise is applied.
Two noise models are supported for the tracker vectors:

* additive: v + eta, eta ~ N(0, sigma_v^2 I3)
* multiplicative: a small random rotation of v by a rotation vector drawn
  from N(0, sigma_theta^2 I3) (output stays unit norm)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import TruthState
from .rotations import (
    dcm_to_q,
    q_to_dcm,
    qconj,
    rotvec_rotate,
    rotvec_to_quat,
    sign_align,
)

__all__ = [
    "CollinearVectors",
    "StarCatalog",
    "NoiseModel",
    "GyroModel",
    "ADDITIVE",
    "MULTIPLICATIVE",
    "misalignment_quat",
    "apply_misalignment",
    "measure_vectors",
    "triad",
    "measure_gyro",
]

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"


class CollinearVectors(ValueError):
    """TRIAD inputs are too close to collinear to span a basis."""


@dataclass(frozen=True)
class StarCatalog:
    """Inertial directions to the two reference stars."""

    v1_i: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    v2_i: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))

    def __post_init__(self):
        for name in ("v1_i", "v2_i"):
            v = np.asarray(getattr(self, name), dtype=float)
            n = np.linalg.norm(v)
            if n == 0.0:
                raise ValueError(f"{name} must be nonzero")
            object.__setattr__(self, name, v / n)
        if np.linalg.norm(np.cross(self.v1_i, self.v2_i)) < 0.1:
            raise ValueError("catalog stars are too close to collinear for TRIAD")


@dataclass(frozen=True)
class NoiseModel:
    """Tracker noise model selector and scales."""

    kind: str = MULTIPLICATIVE
    sigma_v: float = 1.0e-3       # additive vector noise std (per axis)
    sigma_theta: float = 8.73e-4  # multiplicative rotation noise std, rad

    def __post_init__(self):
        if self.kind not in (ADDITIVE, MULTIPLICATIVE):
            raise ValueError(f"unknown noise model {self.kind!r}")
        if self.sigma_v < 0.0 or self.sigma_theta < 0.0:
            raise ValueError("noise sigmas must be non-negative")


@dataclass(frozen=True)
class GyroModel:
    sigma_g: float = 5.0e-4  # rate noise std, rad/s

    def __post_init__(self):
        if self.sigma_g < 0.0:
            raise ValueError("gyro sigma must be non-negative")


def misalignment_quat(mu: np.ndarray) -> np.ndarray:
    """Quaternion whose DCM actively rotates measured directions by mu.

    Composing it onto an attitude quaternion gives the tracker-frame
    attitude implied by the mounting offset, so a filter hypothesis built
    with this helper matches measurements synthesized by
    apply_misalignment with the same mu.
    """
    return qconj(rotvec_to_quat(np.asarray(mu, dtype=float)))


def apply_misalignment(v_b: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Rotate a body-frame direction by the mounting offset mu (rad)."""
    return rotvec_rotate(np.asarray(mu, dtype=float), np.asarray(v_b, dtype=float))


def measure_vectors(
    truth: TruthState,
    catalog: StarCatalog,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Synthesize the two tracker unit-vector observations.

    Rotates the catalog into the body frame, applies the common mounting
    offset to both trackers, then perturbs each vector independently with
    the selected noise model.  Additive outputs are not renormalized (the
    TRIAD construction normalizes internally).
    """
    c_bi = q_to_dcm(truth.q)
    out = []
    for v_i in (catalog.v1_i, catalog.v2_i):
        v = apply_misalignment(c_bi @ v_i, truth.mis)
        if noise.kind == ADDITIVE:
            v = v + rng.normal(0.0, noise.sigma_v, 3)
        else:
            v = rotvec_rotate(rng.normal(0.0, noise.sigma_theta, 3), v)
        out.append(v)
    return out[0], out[1]


def triad(
    v1_i: np.ndarray,
    v2_i: np.ndarray,
    v1_b: np.ndarray,
    v2_b: np.ndarray,
    ref: np.ndarray | None = None,
) -> np.ndarray:
    """Deterministic two-vector attitude solution.

    Builds orthonormal triads in both frames, forms C = T_B @ T_I^T and
    returns the quaternion, sign-aligned to ref when given (measurement
    quaternions are otherwise sign-ambiguous).
    """

    def basis(v1, v2):
        t1 = v1 / np.linalg.norm(v1)
        c = np.cross(v1, v2)
        n = np.linalg.norm(c)
        if n <= 1e-6 * np.linalg.norm(v1) * np.linalg.norm(v2):
            raise CollinearVectors("vector pair is (nearly) collinear")
        t2 = c / n
        return np.column_stack([t1, t2, np.cross(t1, t2)])

    c_bi = basis(v1_b, v2_b) @ basis(v1_i, v2_i).T
    q = dcm_to_q(c_bi)
    return sign_align(q, ref) if ref is not None else q


def measure_gyro(truth: TruthState, gyro: GyroModel, rng: np.random.Generator) -> np.ndarray:
    """Gyro reading: true rate plus bias plus white noise."""
    return truth.omega + truth.bias + rng.normal(0.0, gyro.sigma_g, 3)
