# Scratch: shrink-factor sweep for the refinement strategies.
import dataclasses, json, time
import numpy as np
from starcal.config import SimConfig
from starcal.harness import run_monte_carlo, mean_refinements
from starcal.mmae import STRATEGIES

for shrink in (0.65, 0.75):
    base = SimConfig().validate().with_campaign(runs=12, seed=777, workers=2)
    base = base.replace(strategy=dataclasses.replace(base.strategy, shrink=shrink, max_refinements=10))
    row = {}
    for kind in STRATEGIES:
        results, rmse = run_monte_carlo(base.with_strategy(kind))
        err_ax = np.sqrt(np.mean(np.stack([r.err_mu[-1] for r in results])**2, axis=0))
        row[kind] = {"xi_mu": float(rmse.xi_mu[-1]), "ref": mean_refinements(results),
                     "axes": err_ax.round(7).tolist()}
    print("shrink", shrink, json.dumps(row), flush=True)
