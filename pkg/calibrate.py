# Scratch calibration for acceptance-level behavior (not part of the package).
import dataclasses
import json
import time

import numpy as np

from starcal.config import SimConfig, maneuver_comparison_profile, single_filter_profile
from starcal.harness import (
    consistency_report,
    final_attitude_errors_deg,
    final_bias_errors,
    mean_refinements,
    run_monte_carlo,
)
from starcal.mmae import STRATEGIES
from starcal.sensors import ADDITIVE, MULTIPLICATIVE

out = {}
t00 = time.time()

# --- strategy comparison, shared seeds, full scenario, 12 trials ---
base = SimConfig().validate().with_campaign(runs=12, seed=777, workers=2)
for kind in STRATEGIES:
    t0 = time.time()
    results, rmse = run_monte_carlo(base.with_strategy(kind))
    rep = consistency_report(results)
    out[kind] = {
        "xi_mu_final": float(rmse.xi_mu[-1]),
        "xi_q_final": float(rmse.xi_q[-1]),
        "refinements_mean": mean_refinements(results),
        "refinement_counts": [r.n_refinements for r in results],
        "att_deg_mean": float(np.mean(final_attitude_errors_deg(results))),
        "containment": {
            "attitude": rep.attitude.tolist(),
            "rate": rep.rate.tolist(),
            "bias": rep.bias.tolist(),
            "mu": rep.misalignment.tolist(),
        },
        "failed": sum(r.failed for r in results),
        "wall_s": time.time() - t0,
    }
    print(kind, json.dumps(out[kind]), flush=True)

# --- mistuned containment check (Q x 1e-4) ---
f = base.filter
mis = base.replace(filter=dataclasses.replace(
    f, q_omega=f.q_omega * 1e-2, q_bias=f.q_bias * 1e-2, q_attitude=f.q_attitude * 1e-2,
)).with_campaign(runs=6)
results, _ = run_monte_carlo(mis)
rep = consistency_report(results)
out["mistuned"] = {"attitude": rep.attitude.tolist(), "rate": rep.rate.tolist(),
                   "bias": rep.bias.tolist(), "mu": rep.misalignment.tolist(),
                   "failed": sum(r.failed for r in results)}
print("mistuned", json.dumps(out["mistuned"]), flush=True)

# --- noise comparison profile, paired seeds ---
noise_base = maneuver_comparison_profile(SimConfig()).with_campaign(runs=24, seed=555, workers=2)
for model in (ADDITIVE, MULTIPLICATIVE):
    results, _ = run_monte_carlo(noise_base.with_noise_model(model))
    att = final_attitude_errors_deg(results)
    out["noise_" + model] = {"mean": float(att.mean()), "std": float(att.std(ddof=1)),
                             "max": float(att.max()), "failed": sum(r.failed for r in results)}
    print("noise", model, json.dumps(out["noise_" + model]), flush=True)

# --- single-filter accuracy (criterion 4 style) ---
sf = single_filter_profile(SimConfig()).with_campaign(runs=10, seed=99, workers=2)
results, rmse = run_monte_carlo(sf)
att = final_attitude_errors_deg(results)
out["single"] = {"att_mean_deg": float(att.mean()), "att_max_deg": float(att.max()),
                 "bias_mean": float(np.mean(final_bias_errors(results))),
                 "xi_q_final": float(rmse.xi_q[-1]),
                 "failed": sum(r.failed for r in results)}
print("single", json.dumps(out["single"]), flush=True)

out["total_wall_s"] = time.time() - t00
with open("/tmp/calibration.json", "w") as fh:
    json.dump(out, fh, indent=1)
print("TOTAL", out["total_wall_s"], flush=True)
