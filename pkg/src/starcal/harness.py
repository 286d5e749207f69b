"""Seeded Monte Carlo campaign driver.

One trial = truth propagation, measurement synthesis, a full bank step
(predict, update, weights, refine-or-prune), quaternion fusion and logging,
repeated over the whole horizon.  Campaigns run trials on a process pool
with per-trial random streams spawned from the campaign seed, so results
are bit-identical for a given (seed, config) regardless of worker count.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import DEG, SimConfig
from .dynamics import TruthState, propagate_truth
from .fusion import markley_mean
from .mekf import bank_predict, bank_update
from .mmae import (
    DegenerateWeights,
    HypothesisBank,
    check_trigger,
    prune,
    psi,
    refine,
    update_weights,
    weighted_mean_misalignment,
)
from .rotations import q_to_mrp, qconj, qmult, qnormalize, quat_angle, sign_align
from .sensors import measure_gyro, measure_vectors, triad

__all__ = [
    "RunResult",
    "RmseSeries",
    "ConsistencyReport",
    "run_trial",
    "run_monte_carlo",
    "compute_rmse",
    "consistency_report",
    "final_attitude_errors_deg",
    "final_bias_errors",
    "mean_refinements",
]

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Per-step logs of one trial plus trial-level metadata."""

    trial: int
    time: np.ndarray = field(default=None, repr=False)
    q_true: np.ndarray = field(default=None, repr=False)
    q_est: np.ndarray = field(default=None, repr=False)
    omega_true: np.ndarray = field(default=None, repr=False)
    omega_est: np.ndarray = field(default=None, repr=False)
    bias_est: np.ndarray = field(default=None, repr=False)
    mu_est: np.ndarray = field(default=None, repr=False)
    err_att: np.ndarray = field(default=None, repr=False)     # MRP components
    err_omega: np.ndarray = field(default=None, repr=False)
    err_bias: np.ndarray = field(default=None, repr=False)
    err_mu: np.ndarray = field(default=None, repr=False)
    sig3_att: np.ndarray = field(default=None, repr=False)
    sig3_omega: np.ndarray = field(default=None, repr=False)
    sig3_bias: np.ndarray = field(default=None, repr=False)
    sig3_mu: np.ndarray = field(default=None, repr=False)
    psi: np.ndarray = field(default=None, repr=False)
    n_alive: np.ndarray = field(default=None, repr=False)
    max_weight: np.ndarray = field(default=None, repr=False)
    refined: np.ndarray = field(default=None, repr=False)
    att_angle_deg: np.ndarray = field(default=None, repr=False)
    bias_true: np.ndarray = None
    mu_true: np.ndarray = None
    refinement_times: list = field(default_factory=list)
    failed: bool = False
    message: str = ""

    @property
    def n_refinements(self) -> int:
        return len(self.refinement_times)


@dataclass(frozen=True)
class RmseSeries:
    """Cross-trial RMSE time series for each estimated quantity."""

    time: np.ndarray
    xi_q: np.ndarray      # quaternion-component units
    xi_omega: np.ndarray  # rad/s
    xi_bias: np.ndarray   # rad/s
    xi_mu: np.ndarray     # rad


@dataclass(frozen=True)
class ConsistencyReport:
    """Per-axis fraction of samples with |error| inside the 3-sigma bound."""

    attitude: np.ndarray
    rate: np.ndarray
    bias: np.ndarray
    misalignment: np.ndarray

    def minimum(self) -> float:
        return float(min(self.attitude.min(), self.rate.min(),
                         self.bias.min(), self.misalignment.min()))


def _random_unit_quat(rng: np.random.Generator) -> np.ndarray:
    """Uniform over the rotation group (normalized 4d Gaussian)."""
    q = rng.normal(size=4)
    return qnormalize(q)


def _sample_mu(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.truth.mu_mode == "fixed":
        return np.asarray(cfg.truth.mu_fixed_rad, dtype=float)
    a = cfg.truth.mu_box_rad
    return rng.uniform(-a, a, 3)


def run_trial(cfg: SimConfig, seed, trial: int = 0) -> RunResult:
    """Execute one seeded trial of the configured scenario.

    seed is anything np.random.SeedSequence accepts (int or SeedSequence).
    A diverged trial is returned with failed=True instead of raising.
    """
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng_truth, rng_star, rng_gyro, rng_man = (np.random.default_rng(s) for s in seq.spawn(4))

    j = cfg.inertia()
    torque = cfg.torque_profile()
    noise_cfg = cfg.noise_config()
    noise = cfg.noise_model()
    gyro = cfg.gyro_model()
    catalog = cfg.catalog()
    strategy = cfg.refinement_strategy()
    dt = cfg.time.dt
    n_steps = cfg.time.n_steps

    # truth initialization: attitude uniform on the rotation group, fixed
    # initial spin, bias drawn from the filter's initial bias covariance
    truth = TruthState(
        q=_random_unit_quat(rng_truth),
        omega=cfg.truth.omega0.copy(),
        bias=rng_truth.normal(0.0, cfg.filter.p0_bias, 3),
        mis=_sample_mu(cfg, rng_truth),
    )

    # cold start from the first measurement pair
    v1, v2 = measure_vectors(truth, catalog, noise, rng_star)
    q0 = triad(catalog.v1_i, catalog.v2_i, v1, v2)
    w0 = measure_gyro(truth, gyro, rng_gyro)
    bank = HypothesisBank.from_grid(
        center=np.zeros(3), half_width=cfg.grid.half_width_rad, n_axis=cfg.grid.n_axis,
        q0=q0, omega0=w0, bias0=np.zeros(3), noise=noise_cfg,
    )

    man_times = cfg.maneuver_times()
    man_steps = {int(round(tm / dt)): i for i, tm in enumerate(man_times)}
    man_deltas = (
        rng_man.choice([-1.0, 1.0], size=(len(man_times), 3)) * cfg.maneuver.step_deg_s * DEG
        if len(man_times) else np.empty((0, 3))
    )

    res = RunResult(trial=trial, bias_true=truth.bias.copy(), mu_true=truth.mis.copy())
    log = {name: np.empty((n_steps, 3)) for name in (
        "omega_true", "omega_est", "bias_est", "mu_est", "err_att", "err_omega",
        "err_bias", "err_mu", "sig3_att", "sig3_omega", "sig3_bias", "sig3_mu")}
    log["q_true"] = np.empty((n_steps, 4))
    log["q_est"] = np.empty((n_steps, 4))
    for name in ("time", "psi", "n_alive", "max_weight", "refined", "att_angle_deg"):
        log[name] = np.empty(n_steps)

    q_fused = q0
    try:
        for k in range(n_steps):
            t = k * dt
            if k in man_steps:
                truth = dataclasses.replace(truth, omega=truth.omega + man_deltas[man_steps[k]])
            truth = propagate_truth(truth, j, torque, t, dt)
            t_next = (k + 1) * dt

            v1, v2 = measure_vectors(truth, catalog, noise, rng_star)
            q_meas = triad(catalog.v1_i, catalog.v2_i, v1, v2, ref=q_fused)
            w_meas = measure_gyro(truth, gyro, rng_gyro)

            bank.q, bank.omega, bank.bias, bank.p = bank_predict(
                bank.q, bank.omega, bank.bias, bank.p, j, noise_cfg.q, dt, torque, t)
            bank.q, bank.omega, bank.bias, bank.p, residuals = bank_update(
                bank.q, bank.omega, bank.bias, bank.p, q_meas, w_meas,
                bank.mount_quats, noise_cfg.r)
            update_weights(bank, residuals, noise_cfg.r)

            psi_val = psi(bank)
            max_w = float(np.max(bank.weights))
            center = check_trigger(bank, strategy)
            if center is not None:
                res.refinement_times.append(t_next)
                bank = refine(bank, center, strategy)
            else:
                prune(bank, cfg.grid.prune_fraction / len(bank))

            p_map = bank.p
            mu_est = weighted_mean_misalignment(bank)
            dmu = bank.mus - mu_est
            mu_var = bank.weights @ (dmu * dmu)
            if bank.n_axis > 1:
                cell = 2.0 * bank.half_width / (bank.n_axis - 1)
                mu_var = mu_var + cell * cell / 12.0  # within-cell quantization

            q_fused = markley_mean(bank.q, bank.weights, q_fused)
            omega_est = bank.weights @ bank.omega
            bias_est = bank.weights @ bank.bias

            dq_err = qmult(truth.q, qconj(q_fused))
            err_att = q_to_mrp(np.where(dq_err[3] < 0.0, -dq_err, dq_err))

            log["time"][k] = t_next
            log["q_true"][k] = truth.q
            log["q_est"][k] = q_fused
            log["omega_true"][k] = truth.omega
            log["omega_est"][k] = omega_est
            log["bias_est"][k] = bias_est
            log["mu_est"][k] = mu_est
            log["err_att"][k] = err_att
            log["err_omega"][k] = truth.omega - omega_est
            log["err_bias"][k] = truth.bias - bias_est
            log["err_mu"][k] = truth.mis - mu_est
            log["sig3_att"][k] = 3.0 * np.sqrt(np.diag(p_map)[6:9])
            log["sig3_omega"][k] = 3.0 * np.sqrt(np.diag(p_map)[0:3])
            log["sig3_bias"][k] = 3.0 * np.sqrt(np.diag(p_map)[3:6])
            log["sig3_mu"][k] = 3.0 * np.sqrt(mu_var)
            log["psi"][k] = psi_val
            log["n_alive"][k] = len(bank)
            log["max_weight"][k] = max_w
            log["refined"][k] = 1.0 if center is not None else 0.0
            log["att_angle_deg"][k] = quat_angle(truth.q, q_fused) / DEG
    except (DegenerateWeights, np.linalg.LinAlgError, FloatingPointError) as exc:
        logger.warning("trial %d diverged at t=%.1f s: %s", trial, t, exc)
        res.failed = True
        res.message = f"{type(exc).__name__}: {exc}"

    for name, arr in log.items():
        setattr(res, name, arr)
    return res


def _run_trial_star(args):
    cfg, seed, trial = args
    return run_trial(cfg, seed, trial)


def run_monte_carlo(cfg: SimConfig, workers: int | None = None) -> tuple[list[RunResult], RmseSeries]:
    """Run the configured number of independent trials.

    Trials receive spawned child seeds of campaign.seed, so the campaign is
    reproducible and independent of the worker count (workers <= 1 runs
    serially; 0 or None picks one worker per CPU).
    """
    if workers is None:
        workers = cfg.campaign.workers
    if workers == 0:
        import os

        workers = os.cpu_count() or 1
    seeds = np.random.SeedSequence(cfg.campaign.seed).spawn(cfg.campaign.runs)
    jobs = [(cfg, s, i) for i, s in enumerate(seeds)]
    if workers <= 1 or cfg.campaign.runs == 1:
        results = [_run_trial_star(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.campaign.runs)) as pool:
            results = list(pool.map(_run_trial_star, jobs))
    results.sort(key=lambda r: r.trial)
    rmse = compute_rmse(results) if any(not r.failed for r in results) else None
    return results, rmse


def _ok(results: list[RunResult]) -> list[RunResult]:
    good = [r for r in results if not r.failed]
    if not good:
        raise DegenerateWeights("every trial in the campaign diverged")
    return good


def compute_rmse(results: list[RunResult]) -> RmseSeries:
    """Cross-trial RMSE of the sign-aligned quaternion difference and of
    the rate, bias and misalignment error vectors."""
    good = _ok(results)
    q_true = np.stack([r.q_true for r in good])
    q_est = np.stack([r.q_est for r in good])
    q_est = sign_align(q_est, q_true)
    dq = q_true - q_est

    def rms(stack):
        return np.sqrt(np.mean(np.sum(stack * stack, axis=-1), axis=0))

    return RmseSeries(
        time=good[0].time.copy(),
        xi_q=rms(dq),
        xi_omega=rms(np.stack([r.err_omega for r in good])),
        xi_bias=rms(np.stack([r.err_bias for r in good])),
        xi_mu=rms(np.stack([r.err_mu for r in good])),
    )


def consistency_report(results: list[RunResult]) -> ConsistencyReport:
    """Fraction of (trial, step) samples inside the logged 3-sigma bounds."""
    good = _ok(results)

    def contained(err_name, sig_name):
        err = np.concatenate([np.abs(getattr(r, err_name)) for r in good])
        sig = np.concatenate([getattr(r, sig_name) for r in good])
        return np.mean(err <= sig, axis=0)

    return ConsistencyReport(
        attitude=contained("err_att", "sig3_att"),
        rate=contained("err_omega", "sig3_omega"),
        bias=contained("err_bias", "sig3_bias"),
        misalignment=contained("err_mu", "sig3_mu"),
    )


def final_attitude_errors_deg(results: list[RunResult]) -> np.ndarray:
    return np.array([r.att_angle_deg[-1] for r in _ok(results)])


def final_bias_errors(results: list[RunResult]) -> np.ndarray:
    return np.array([np.linalg.norm(r.err_bias[-1]) for r in _ok(results)])


def mean_refinements(results: list[RunResult]) -> float:
    return float(np.mean([r.n_refinements for r in _ok(results)]))
