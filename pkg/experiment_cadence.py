# Scratch: (shrink, budget) sweep, psi-mean vs psi-map margins over seeds.
import dataclasses, json
import numpy as np
from starcal.config import SimConfig
from starcal.harness import run_monte_carlo, mean_refinements

for shrink, budget in ((0.70, 6), (0.75, 6), (0.65, 6), (0.70, 8)):
    base = SimConfig().validate().with_campaign(runs=12, seed=777, workers=2)
    base = base.replace(strategy=dataclasses.replace(
        base.strategy, shrink=shrink, max_refinements=budget))
    row = {}
    per_trial = {}
    for kind in ("psi-map", "psi-mean", "classical-map"):
        results, rmse = run_monte_carlo(base.with_strategy(kind))
        row[kind] = {"xi_mu": float(rmse.xi_mu[-1]), "ref": mean_refinements(results)}
        per_trial[kind] = [float(np.linalg.norm(r.err_mu[-1])) for r in results]
    wins = sum(1 for a, b in zip(per_trial["psi-mean"], per_trial["psi-map"]) if a < b)
    row["mean_beats_map_trials"] = f"{wins}/12"
    print("shrink", shrink, "budget", budget, json.dumps(row), flush=True)
