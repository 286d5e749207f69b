# Scratch: tune the noise-comparison profile for a robust paired margin.
import dataclasses, json
import numpy as np
from starcal.config import SimConfig, maneuver_comparison_profile
from starcal.harness import run_monte_carlo, final_attitude_errors_deg

base0 = maneuver_comparison_profile(SimConfig()).with_campaign(runs=24, seed=555, workers=1)
for q_att, sigma_v in ((2e-3, 8e-3), (2e-3, 1e-2), (5e-4, 1e-2), (5e-4, 1.25e-2)):
    base = base0.replace(
        filter=dataclasses.replace(base0.filter, q_attitude=q_att),
        measurement=dataclasses.replace(base0.measurement, sigma_v=sigma_v),
    )
    att = {}
    for model in ("additive", "multiplicative"):
        results, _ = run_monte_carlo(base.with_noise_model(model))
        att[model] = final_attitude_errors_deg(results)
    d = att["additive"] - att["multiplicative"]
    z = d.mean() / (d.std(ddof=1) / np.sqrt(len(d)))
    print(json.dumps({
        "q_att": q_att, "sigma_v": sigma_v,
        "mean_add": round(float(att["additive"].mean()), 4),
        "mean_mult": round(float(att["multiplicative"].mean()), 4),
        "max_add": round(float(att["additive"].max()), 4),
        "paired_z": round(float(z), 2),
        "wins": f"{int((d > 0).sum())}/24",
    }), flush=True)
