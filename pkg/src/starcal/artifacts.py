"""Campaign outputs: per-run CSV logs, text summaries and SVG plots.

All CSV output is RFC 4180 (comma separated, CRLF, '.' decimal, UTF-8)
with a fixed column order; float cells use the '%.10e' format so reruns
with the same seed are byte identical.  SVGs are written without embedded
timestamps for the same reason.
"""

from __future__ import annotations

import os
from dataclasses import asdict

import numpy as np

from .config import SimConfig
from .harness import (
    ConsistencyReport,
    RmseSeries,
    RunResult,
    final_attitude_errors_deg,
    final_bias_errors,
    mean_refinements,
)

__all__ = [
    "RUN_CSV_COLUMNS",
    "write_run_csv",
    "write_rmse_csv",
    "write_summary",
    "write_plots",
    "emit_artifacts",
    "format_strategy_table",
    "format_noise_table",
]

_VEC = ("x", "y", "z")
_QUAT = ("x", "y", "z", "s")

_RUN_FIELDS = [
    ("time", ("",)),
    ("q_true", _QUAT),
    ("q_est", _QUAT),
    ("omega_true", _VEC),
    ("omega_est", _VEC),
    ("bias_est", _VEC),
    ("mu_est", _VEC),
    ("err_att", _VEC),
    ("err_omega", _VEC),
    ("err_bias", _VEC),
    ("err_mu", _VEC),
    ("sig3_att", _VEC),
    ("sig3_omega", _VEC),
    ("sig3_bias", _VEC),
    ("sig3_mu", _VEC),
    ("psi", ("",)),
    ("n_alive", ("",)),
    ("max_weight", ("",)),
    ("refined", ("",)),
    ("att_angle_deg", ("",)),
]

RUN_CSV_COLUMNS = [
    f"{name}_{axis}" if axis else name for name, axes in _RUN_FIELDS for axis in axes
]


def _write_csv(path: str, header: list[str], data: np.ndarray) -> None:
    rows = [",".join(header)]
    rows += [",".join(f"{v:.10e}" for v in row) for row in np.atleast_2d(data)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\r\n".join(rows) + "\r\n")


def write_run_csv(result: RunResult, path: str) -> None:
    """Time series of one trial, one row per simulation step."""
    cols = []
    for name, axes in _RUN_FIELDS:
        arr = getattr(result, name)
        cols.append(arr[:, None] if arr.ndim == 1 else arr)
    _write_csv(path, RUN_CSV_COLUMNS, np.hstack(cols))


def write_rmse_csv(rmse: RmseSeries, path: str) -> None:
    header = ["time", "xi_q", "xi_omega", "xi_bias", "xi_mu"]
    _write_csv(path, header, np.column_stack([rmse.time, rmse.xi_q, rmse.xi_omega,
                                              rmse.xi_bias, rmse.xi_mu]))


def _fmt_cfg(cfg: SimConfig) -> str:
    lines = []
    for group, values in asdict(cfg).items():
        if isinstance(values, dict):
            body = ", ".join(f"{k}={v}" for k, v in values.items())
            lines.append(f"  {group}: {body}")
        else:
            lines.append(f"  {group}: {values}")
    return "\n".join(lines)


def write_summary(
    results: list[RunResult],
    rmse: RmseSeries,
    cfg: SimConfig,
    path: str,
    consistency: ConsistencyReport | None = None,
) -> None:
    """Campaign summary: final RMSE values, error statistics, refinements."""
    good = [r for r in results if not r.failed]
    att = final_attitude_errors_deg(results)
    bias = final_bias_errors(results)
    lines = [
        "campaign summary",
        "================",
        f"trials: {len(results)} ({len(results) - len(good)} failed)",
        f"strategy: {cfg.strategy.kind}   noise model: {cfg.measurement.model}",
        "",
        f"final rmse at t = {rmse.time[-1]:.1f} s",
        f"  xi_q    = {rmse.xi_q[-1]:.4g}  (quaternion components)",
        f"  xi_omega= {rmse.xi_omega[-1]:.4g}  rad/s",
        f"  xi_bias = {rmse.xi_bias[-1]:.4g}  rad/s",
        f"  xi_mu   = {rmse.xi_mu[-1]:.4g}  rad",
        "",
        "final attitude error (deg)",
        f"  mean = {att.mean():.4g}   std = {att.std(ddof=1) if len(att) > 1 else 0.0:.4g}   max = {att.max():.4g}",
        f"final bias error (rad/s): mean = {bias.mean():.4g}",
        f"refinements per trial: mean = {mean_refinements(results):.4g}",
    ]
    if consistency is not None:
        lines += [
            "",
            "3-sigma containment per axis",
            f"  attitude     : {np.array2string(consistency.attitude, precision=4)}",
            f"  rate         : {np.array2string(consistency.rate, precision=4)}",
            f"  bias         : {np.array2string(consistency.bias, precision=4)}",
            f"  misalignment : {np.array2string(consistency.misalignment, precision=4)}",
        ]
    lines += ["", "configuration", _fmt_cfg(cfg), ""]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))


def write_plots(results: list[RunResult], rmse: RmseSeries, out_dir: str) -> list[str]:
    """RMSE convergence panels, the diversity trace and the refinement-time
    histogram, as deterministic SVGs."""
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    meta = {"metadata": {"Date": None}}
    good = [r for r in results if not r.failed]
    written = []

    fig, axes = plt.subplots(2, 2, figsize=(9, 7))
    panels = [
        (rmse.xi_q, "attitude rmse (quaternion components)"),
        (rmse.xi_bias, "gyro bias rmse (rad/s)"),
        (rmse.xi_omega, "angular velocity rmse (rad/s)"),
        (rmse.xi_mu, "misalignment rmse (rad)"),
    ]
    for ax, (series, title) in zip(axes.ravel(), panels):
        ax.semilogy(rmse.time, np.maximum(series, 1e-300))
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("time (s)")
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = os.path.join(out_dir, "rmse_convergence.svg")
    fig.savefig(path, **meta)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4))
    for r in good:
        ax.plot(r.time, r.psi, color="steelblue", alpha=0.2, lw=0.6)
    ax.plot(good[0].time, np.mean([r.psi for r in good], axis=0), color="crimson", lw=1.5,
            label="mean over trials")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("hypothesis diversity (%)")
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = os.path.join(out_dir, "psi_trace.svg")
    fig.savefig(path, **meta)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4))
    times = [t for r in good for t in r.refinement_times]
    if times:
        ax.hist(times, bins=40)
    ax.set_xlabel("refinement time (s)")
    ax.set_ylabel("count")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = os.path.join(out_dir, "refinement_histogram.svg")
    fig.savefig(path, **meta)
    plt.close(fig)
    written.append(path)
    return written


def emit_artifacts(
    results: list[RunResult],
    rmse: RmseSeries,
    cfg: SimConfig,
    out_dir: str,
    consistency: ConsistencyReport | None = None,
    plots: bool = True,
) -> None:
    """Write the full artifact set for one campaign under out_dir."""
    runs_dir = os.path.join(out_dir, "runs")
    os.makedirs(runs_dir, exist_ok=True)
    for r in results:
        if not r.failed:
            write_run_csv(r, os.path.join(runs_dir, f"run_{r.trial:03d}.csv"))
    write_rmse_csv(rmse, os.path.join(out_dir, "rmse.csv"))
    write_summary(results, rmse, cfg, os.path.join(out_dir, "summary.txt"), consistency)
    if plots:
        write_plots(results, rmse, out_dir)


def format_strategy_table(rows: list[dict]) -> str:
    """Refinement-strategy comparison in the layout of the reference table.

    rows: dicts with keys strategy, refinements, xi_mu.
    """
    lines = [
        "strategy comparison (shared seeds)",
        f"{'strategy':<18} {'avg refinements':>16} {'final xi_mu (rad)':>18}",
    ]
    for row in rows:
        lines.append(f"{row['strategy']:<18} {row['refinements']:>16.2f} {row['xi_mu']:>18.4e}")
    return "\n".join(lines) + "\n"


def format_noise_table(rows: list[dict]) -> str:
    """Additive/multiplicative comparison of final attitude errors (deg)."""
    lines = [
        "noise-model comparison (shared seeds, maneuver scenario)",
        f"{'metric':<24} " + " ".join(f"{row['model']:>15}" for row in rows),
    ]
    for key, label in (("mean", "mean final error"), ("std", "std final error"),
                       ("max", "max final error")):
        lines.append(f"{label + ' (deg)':<24} " + " ".join(f"{row[key]:>15.4f}" for row in rows))
    return "\n".join(lines) + "\n"
