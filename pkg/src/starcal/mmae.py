"""Multiple-model layer: hypothesis grid, Bayesian weights, pruning and
adaptive grid refinement.

Each hypothesis is a candidate misalignment vector with a posterior weight
and its own MEKF.  The bank stores all filters as stacked arrays so the
whole bank steps through predict/update vectorized.  Three refinement
strategies are provided:

* classical-map: refine when one model's weight exceeds w_branch; recenter
  on that model.
* psi-map: refine when the diversity metric Psi drops below a threshold;
  recenter on the maximum a posteriori model.
* psi-mean: same trigger, recenter on the weighted mean of the hypotheses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mekf import NoiseConfig
from .sensors import misalignment_quat

__all__ = [
    "DegenerateWeights",
    "CLASSICAL_MAP",
    "PSI_MAP",
    "PSI_MEAN",
    "STRATEGIES",
    "RefinementStrategy",
    "HypothesisBank",
    "generate_grid",
    "update_weights",
    "prune",
    "psi",
    "check_trigger",
    "refine",
    "weighted_mean_misalignment",
]

CLASSICAL_MAP = "classical-map"
PSI_MAP = "psi-map"
PSI_MEAN = "psi-mean"
STRATEGIES = (CLASSICAL_MAP, PSI_MAP, PSI_MEAN)


class DegenerateWeights(FloatingPointError):
    """Every model likelihood collapsed; the filter bank has diverged."""


@dataclass(frozen=True)
class RefinementStrategy:
    """Trigger rule plus grid-shrink parameters.

    min_half_width floors the zoom: once the lattice spacing reaches the
    scale the measurements can still resolve, further refinements recenter
    the grid without shrinking it.  Shrinking past that scale lets a grid
    centered slightly off along a weakly observable axis lose the true
    offset entirely and freeze the error there.
    """

    kind: str = PSI_MEAN
    w_branch: float = 0.5        # classical trigger threshold on max weight
    psi_threshold: float = 10.0  # percent, Psi triggers below this
    shrink: float = 0.65         # half-width multiplier per refinement
    max_refinements: int = 7
    min_half_width: float = 0.0  # rad; 0 disables the floor

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if not 0.0 < self.w_branch < 1.0:
            raise ValueError("w_branch must be in (0, 1)")
        if not 0.0 < self.psi_threshold <= 100.0:
            raise ValueError("psi_threshold must be in (0, 100]")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must be in (0, 1)")
        if self.min_half_width < 0.0:
            raise ValueError("min_half_width must be non-negative")


def generate_grid(center: np.ndarray, half_width: float, n_axis: int) -> np.ndarray:
    """Uniform cubic lattice of n_axis^3 hypothesis vectors.

    n_axis must be odd so the exact center is a lattice point.  n_axis = 1
    degenerates to the center alone (single-filter runs).
    """
    if n_axis < 1 or n_axis % 2 == 0:
        raise ValueError("n_axis must be an odd positive integer")
    center = np.asarray(center, dtype=float)
    if n_axis == 1:
        return center[None, :].copy()
    offsets = np.linspace(-half_width, half_width, n_axis)
    gx, gy, gz = np.meshgrid(*(center[i] + offsets for i in range(3)), indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


class HypothesisBank:
    """All live hypotheses and their stacked filter states.

    Arrays are index-aligned: mus (n,3), weights (n,), q (n,4), omega (n,3),
    bias (n,3).  mount_quats caches misalignment_quat(mu).

    p is one 9x9 error covariance shared by the whole bank: every filter
    sees the same H, R, Q and measurement stream, so the per-hypothesis
    covariances coincide to numerical precision and carrying one copy
    removes the dominant per-model cost (see mekf.bank_predict).
    """

    def __init__(self, mus, weights, q, omega, bias, p, half_width, n_axis, refinements_done=0):
        self.mus = np.asarray(mus, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.omega = np.asarray(omega, dtype=float)
        self.bias = np.asarray(bias, dtype=float)
        self.p = np.asarray(p, dtype=float)
        self.half_width = float(half_width)
        self.n_axis = int(n_axis)
        self.refinements_done = int(refinements_done)
        self.mount_quats = misalignment_quat(self.mus)

    @classmethod
    def from_grid(
        cls,
        center: np.ndarray,
        half_width: float,
        n_axis: int,
        q0: np.ndarray,
        omega0: np.ndarray,
        bias0: np.ndarray,
        noise: NoiseConfig,
    ) -> "HypothesisBank":
        """Fresh bank: every hypothesis starts from the same filter state."""
        mus = generate_grid(center, half_width, n_axis)
        n = len(mus)
        return cls(
            mus=mus,
            weights=np.full(n, 1.0 / n),
            q=np.tile(np.asarray(q0, dtype=float), (n, 1)),
            omega=np.tile(np.asarray(omega0, dtype=float), (n, 1)),
            bias=np.tile(np.asarray(bias0, dtype=float), (n, 1)),
            p=noise.p0.copy(),
            half_width=half_width,
            n_axis=n_axis,
        )

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def map_index(self) -> int:
        return int(np.argmax(self.weights))


def update_weights(bank: HypothesisBank, residuals: np.ndarray, r: np.ndarray) -> HypothesisBank:
    """Bayesian weight update from the per-model residual likelihoods.

    Computed in the log domain with the max subtracted before
    exponentiation; the constant Gaussian prefactor cancels in the
    normalization.  Raises DegenerateWeights when no finite likelihood
    remains (filter divergence).
    """
    y = np.asarray(residuals, dtype=float)
    r_diag = np.diag(np.asarray(r, dtype=float))
    loglik = -0.5 * np.sum(y * y / r_diag, axis=-1)
    with np.errstate(divide="ignore"):  # underflowed-to-zero priors are legal
        logw = np.log(bank.weights) + loglik
    finite = np.isfinite(logw)
    if not np.any(finite):
        raise DegenerateWeights("all hypothesis weights collapsed")
    w = np.exp(logw - np.max(logw[finite]))
    w[~finite] = 0.0
    total = w.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise DegenerateWeights("all hypothesis weights collapsed")
    bank.weights = w / total
    return bank


def prune(bank: HypothesisBank, w_prune: float) -> HypothesisBank:
    """Drop models with weight <= w_prune and renormalize the survivors.

    Never drops the last model: if everything falls below the threshold
    the maximum-weight hypothesis is kept alone.
    """
    keep = bank.weights > w_prune
    if not np.any(keep):
        keep = np.zeros(len(bank), dtype=bool)
        keep[bank.map_index] = True
    if np.all(keep):
        return bank
    bank.mus = bank.mus[keep]
    bank.weights = bank.weights[keep] / bank.weights[keep].sum()
    bank.q = bank.q[keep]
    bank.omega = bank.omega[keep]
    bank.bias = bank.bias[keep]
    bank.mount_quats = bank.mount_quats[keep]
    return bank


def psi(bank: HypothesisBank) -> float:
    """Hypothesis diversity in percent: 100 / (N * sum w^2).

    100 means perfectly uniform weights; 100/N means one dominant model.
    """
    n = len(bank)
    return 100.0 / (n * float(np.sum(bank.weights**2)))


def check_trigger(bank: HypothesisBank, strategy: RefinementStrategy) -> np.ndarray | None:
    """Return the new grid center if a refinement should fire, else None."""
    if bank.refinements_done >= strategy.max_refinements:
        return None
    if strategy.kind == CLASSICAL_MAP:
        if np.max(bank.weights) > strategy.w_branch:
            return bank.mus[bank.map_index].copy()
        return None
    if psi(bank) < strategy.psi_threshold:
        if strategy.kind == PSI_MAP:
            return bank.mus[bank.map_index].copy()
        return weighted_mean_misalignment(bank)
    return None


def refine(bank: HypothesisBank, center: np.ndarray, strategy: RefinementStrategy) -> HypothesisBank:
    """Rebuild the lattice around `center`, shrinking down to the floor.

    Every new hypothesis inherits the filter state and covariance of the
    current MAP model; weights restart uniform.
    """
    i_map = bank.map_index
    half_width = max(strategy.shrink * bank.half_width, strategy.min_half_width)
    mus = generate_grid(center, half_width, bank.n_axis)
    n = len(mus)
    return HypothesisBank(
        mus=mus,
        weights=np.full(n, 1.0 / n),
        q=np.tile(bank.q[i_map], (n, 1)),
        omega=np.tile(bank.omega[i_map], (n, 1)),
        bias=np.tile(bank.bias[i_map], (n, 1)),
        p=bank.p.copy(),
        half_width=half_width,
        n_axis=bank.n_axis,
        refinements_done=bank.refinements_done + 1,
    )


def weighted_mean_misalignment(bank: HypothesisBank) -> np.ndarray:
    """Posterior-weighted mean of the hypothesis vectors."""
    return bank.weights @ bank.mus
