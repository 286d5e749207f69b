# Scratch: at each refinement, how good are the two centering rules?
import dataclasses
import numpy as np
from starcal.config import SimConfig
from starcal.dynamics import propagate_truth, TruthState
from starcal.harness import _random_unit_quat, _sample_mu
from starcal.mekf import bank_predict, bank_update
from starcal.mmae import (HypothesisBank, RefinementStrategy, check_trigger, prune, psi,
                          refine, update_weights, weighted_mean_misalignment)
from starcal.sensors import measure_gyro, measure_vectors, triad

cfg = SimConfig().validate()
strat = RefinementStrategy(kind="psi-mean", shrink=0.65, max_refinements=8)
nc = cfg.noise_config(); j = cfg.inertia(); tq = cfg.torque_profile()
cat, nm, gm = cfg.catalog(), cfg.noise_model(), cfg.gyro_model()

rows = []
for trial in range(8):
    seq = np.random.SeedSequence(3100 + trial)
    rt, rs, rg, _ = (np.random.default_rng(s) for s in seq.spawn(4))
    truth = TruthState(q=_random_unit_quat(rt), omega=cfg.truth.omega0.copy(),
                       bias=rt.normal(0, cfg.filter.p0_bias, 3), mis=_sample_mu(cfg, rt))
    v1, v2 = measure_vectors(truth, cat, nm, rs)
    q0 = triad(cat.v1_i, cat.v2_i, v1, v2)
    w0 = measure_gyro(truth, gm, rg)
    bank = HypothesisBank.from_grid(np.zeros(3), cfg.grid.half_width_rad, 7, q0, w0, np.zeros(3), nc)
    qf = q0
    for k in range(10000):
        t = k * 0.5
        truth = propagate_truth(truth, j, tq, t, 0.5)
        v1, v2 = measure_vectors(truth, cat, nm, rs)
        qm = triad(cat.v1_i, cat.v2_i, v1, v2, ref=qf)
        wm = measure_gyro(truth, gm, rg)
        bank.q, bank.omega, bank.bias, bank.p = bank_predict(bank.q, bank.omega, bank.bias, bank.p, j, nc.q, 0.5, tq, t)
        bank.q, bank.omega, bank.bias, bank.p, res = bank_update(bank.q, bank.omega, bank.bias, bank.p, qm, wm, bank.mount_quats, nc.r)
        update_weights(bank, res, nc.r)
        center = check_trigger(bank, strat)
        if center is not None:
            mean_c = weighted_mean_misalignment(bank)
            map_c = bank.mus[bank.map_index]
            rows.append((bank.refinements_done, np.linalg.norm(mean_c - truth.mis),
                         np.linalg.norm(map_c - truth.mis), bank.half_width))
            bank = refine(bank, center, strat)
        else:
            prune(bank, cfg.grid.prune_fraction / len(bank))
    mean_final = weighted_mean_misalignment(bank)
    rows.append((99, np.linalg.norm(mean_final - truth.mis), np.nan, bank.half_width))

import collections
by_level = collections.defaultdict(list)
for lvl, em, ema, hw in rows:
    by_level[lvl].append((em, ema, hw))
for lvl in sorted(by_level):
    arr = np.array(by_level[lvl])
    if lvl == 99:
        print(f"final: |mean err| avg {np.nanmean(arr[:,0]):.2e}")
    else:
        print(f"refine {lvl}: n={len(arr)}  |mean-truth| {np.mean(arr[:,0]):.2e}  "
              f"|map-truth| {np.mean(arr[:,1]):.2e}  half_width {np.mean(arr[:,2]):.2e}")
