"""Weighted quaternion averaging for the filter bank (Markley's method).

The mean quaternion minimizing the weighted squared chordal distance to a
set of unit quaternions is the dominant eigenvector of M = sum_j w_j q_j
q_j^T.  M is symmetric 4x4, so a cyclic Jacobi sweep nails the eigenpair
deterministically at machine precision with no convergence tuning.
"""

from __future__ import annotations

import logging

import numpy as np

from .rotations import sign_align

__all__ = ["DegenerateSpectrum", "symmetric_eigmax_4x4", "markley_mean"]

logger = logging.getLogger(__name__)


class DegenerateSpectrum(Warning):
    """Top two eigenvalues of the fusion matrix coincide (ambiguous mean)."""


def _jacobi_eigh(m: np.ndarray, tol: float = 1e-13, max_sweeps: int = 30):
    """Full eigendecomposition of a small symmetric matrix by cyclic Jacobi.

    Returns (eigenvalues, eigenvectors-as-columns), unordered.  Runs on
    plain Python floats: at 4x4 this beats array ops by a wide margin and
    is called once per simulation step.
    """
    from math import atan2, cos, sin

    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    a = [[float(m[i, j]) for j in range(n)] for i in range(n)]
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    scale = max(1.0, float(np.max(np.abs(m))))
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if abs(apq) <= tol * scale:
                    continue
                off = max(off, abs(apq))
                # Givens rotation zeroing a[p][q]
                theta = 0.5 * atan2(2.0 * apq, a[q][q] - a[p][p])
                c, s = cos(theta), sin(theta)
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq
        if off <= tol * scale:
            break
    return np.array([a[i][i] for i in range(n)]), np.array(v)


def symmetric_eigmax_4x4(m: np.ndarray) -> tuple[float, np.ndarray]:
    """Dominant eigenpair (value, unit vector) of a symmetric 4x4 matrix."""
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4) or not np.allclose(m, m.T, atol=1e-10):
        raise ValueError("expected a symmetric 4x4 matrix")
    vals, vecs = _jacobi_eigh(m)
    i = int(np.argmax(vals))
    vec = vecs[:, i]
    return float(vals[i]), vec / np.linalg.norm(vec)


def markley_mean(quats: np.ndarray, weights: np.ndarray, prev: np.ndarray) -> np.ndarray:
    """Weighted chordal mean of unit quaternions, sign-aligned to prev.

    Invariant to flipping the sign of any input (outer products are even)
    and to permuting the (quaternion, weight) pairs.  When the top two
    eigenvalues tie within 1e-12 the mean is ambiguous; the eigenvector
    closest to prev is returned and the event is logged.
    """
    quats = np.asarray(quats, dtype=float)
    weights = np.asarray(weights, dtype=float)
    m = np.einsum("j,ji,jk->ik", weights, quats, quats)
    m = 0.5 * (m + m.T)
    vals, vecs = _jacobi_eigh(m)
    order = np.argsort(vals)[::-1]
    if vals[order[0]] - vals[order[1]] <= 1e-12:
        logger.warning("degenerate fusion spectrum (gap %.3e); tie-broken toward previous estimate",
                       vals[order[0]] - vals[order[1]])
        top = vecs[:, order[:2]]
        i = int(np.argmax(np.abs(prev @ top)))
        vec = top[:, i]
    else:
        vec = vecs[:, order[0]]
    vec = vec / np.linalg.norm(vec)
    return sign_align(vec, prev)
