# Scratch: ordering robustness of (shrink 0.65, budget 8) across seed sets.
import dataclasses, json
import numpy as np
from starcal.config import SimConfig
from starcal.harness import run_monte_carlo, mean_refinements

for seed in (20250810, 424242, 1234567):
    base = SimConfig().validate().with_campaign(runs=20, seed=seed, workers=2)
    base = base.replace(strategy=dataclasses.replace(base.strategy, shrink=0.65, max_refinements=7))
    row = {}
    for kind in ("psi-mean", "psi-map", "classical-map"):
        results, rmse = run_monte_carlo(base.with_strategy(kind))
        row[kind] = {"xi": float(rmse.xi_mu[-1]), "ref": mean_refinements(results)}
    ok1 = row["psi-mean"]["xi"] < row["psi-map"]["xi"] < row["classical-map"]["xi"]
    ok2 = row["classical-map"]["ref"] < min(row["psi-map"]["ref"], row["psi-mean"]["ref"])
    print("seed", seed, json.dumps(row), "ordering_ok", ok1, "counts_ok", ok2, flush=True)
