import math

import numpy as np
import pytest

from starcal import rotations as rot
from starcal.config import SimConfig
from starcal.dynamics import TruthState, propagate_truth
from starcal.mekf import bank_predict, bank_update
from starcal.mmae import (
    CLASSICAL_MAP,
    PSI_MAP,
    PSI_MEAN,
    DegenerateWeights,
    HypothesisBank,
    RefinementStrategy,
    check_trigger,
    generate_grid,
    prune,
    psi,
    refine,
    update_weights,
    weighted_mean_misalignment,
)
from starcal.sensors import GyroModel, measure_gyro, measure_vectors, triad

CFG = SimConfig().validate()
NOISE = CFG.noise_config()


def make_bank(weights, mus=None):
    weights = np.asarray(weights, dtype=float)
    n = len(weights)
    mus = np.zeros((n, 3)) if mus is None else np.asarray(mus, dtype=float)
    return HypothesisBank(
        mus=mus, weights=weights,
        q=np.tile(rot.identity_quat(), (n, 1)),
        omega=np.zeros((n, 3)), bias=np.zeros((n, 3)),
        p=NOISE.p0.copy(), half_width=5e-3, n_axis=7,
    )


class TestGrid:
    def test_three_cubed(self):
        pts = generate_grid(np.zeros(3), 1e-3, 3)
        assert pts.shape == (27, 3)
        assert any(np.allclose(p, 0.0) for p in pts)
        for corner in ([1e-3, 1e-3, 1e-3], [-1e-3, -1e-3, -1e-3], [1e-3, -1e-3, 1e-3]):
            assert any(np.allclose(p, corner) for p in pts)

    def test_seven_cubed(self):
        assert len(generate_grid(np.zeros(3), 5e-3, 7)) == 343

    def test_symmetry(self):
        center = np.array([1e-3, -2e-3, 0.0])
        pts = generate_grid(center, 2e-3, 5)
        mirrored = 2.0 * center - pts
        for m in mirrored[:20]:
            assert np.min(np.linalg.norm(pts - m, axis=1)) <= 1e-15

    def test_degenerate_single_point(self):
        pts = generate_grid(np.array([1e-3, 0, 0]), 0.0, 1)
        assert pts.shape == (1, 3) and np.allclose(pts[0], [1e-3, 0, 0])

    def test_rejects_even(self):
        with pytest.raises(ValueError):
            generate_grid(np.zeros(3), 1e-3, 4)


class TestWeights:
    def test_equal_residuals_leave_weights(self):
        bank = make_bank([0.5, 0.3, 0.2])
        y = np.tile([1e-3, 0, 0, 0, 0, 0], (3, 1))
        update_weights(bank, y, NOISE.r)
        assert np.allclose(bank.weights, [0.5, 0.3, 0.2], atol=1e-12)

    def test_two_model_likelihood_ratio(self):
        # residual with quadratic form 2 ln 3 makes the posterior 3:1
        bank = make_bank([0.5, 0.5])
        r = np.eye(6)
        y = np.zeros((2, 6))
        y[1, 0] = math.sqrt(2.0 * math.log(3.0))
        update_weights(bank, y, r)
        assert np.allclose(bank.weights, [0.75, 0.25], atol=1e-12)

    def test_normalized(self):
        bank = make_bank(np.full(10, 0.1))
        y = np.random.default_rng(1).normal(0, 1e-3, (10, 6))
        update_weights(bank, y, NOISE.r)
        assert bank.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(bank.weights >= 0.0)

    def test_common_likelihood_scale_cancels(self):
        y = np.random.default_rng(2).normal(0, 1e-3, (5, 6))
        a = make_bank(np.full(5, 0.2))
        update_weights(a, y, NOISE.r)
        b = make_bank(np.full(5, 0.2))
        shift = np.zeros((5, 6))
        shift[:, 3] = 5e-3  # identical extra residual on every model
        update_weights(b, np.sqrt(y**2 + shift**2) * np.sign(y), NOISE.r)
        # quadratic forms all shift by the same constant, weights match
        assert np.allclose(a.weights, b.weights, atol=1e-9)

    def test_degenerate_weights_detected(self):
        bank = make_bank([0.5, 0.5])
        y = np.full((2, 6), np.nan)
        with pytest.raises(DegenerateWeights):
            update_weights(bank, y, NOISE.r)


class TestPrune:
    def test_zero_threshold_keeps_all(self):
        bank = make_bank([0.6, 0.3, 0.1])
        prune(bank, 0.0)
        assert len(bank) == 3

    def test_renormalizes_survivors(self):
        bank = make_bank([0.6, 0.3, 0.1])
        prune(bank, 0.2)
        assert len(bank) == 2
        assert np.allclose(bank.weights, [2.0 / 3.0, 1.0 / 3.0])

    def test_never_drops_last(self):
        bank = make_bank([0.6, 0.3, 0.1])
        prune(bank, 0.9)
        assert len(bank) == 1
        assert bank.weights[0] == 1.0

    def test_arrays_stay_aligned(self):
        mus = np.arange(9.0).reshape(3, 3) * 1e-3
        bank = make_bank([0.1, 0.8, 0.1], mus)
        prune(bank, 0.5)
        assert np.allclose(bank.mus[0], mus[1])
        assert len(bank.mount_quats) == 1


class TestPsi:
    def test_uniform_is_100(self):
        assert psi(make_bank(np.full(7, 1.0 / 7.0))) == pytest.approx(100.0)

    def test_single_dominant(self):
        n = 10
        w = np.zeros(n)
        w[3] = 1.0
        assert psi(make_bank(w)) == pytest.approx(100.0 / n)

    def test_half_collapsed(self):
        assert psi(make_bank([0.5, 0.5, 0.0, 0.0])) == pytest.approx(50.0)

    def test_range(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            w = rng.random(20)
            w /= w.sum()
            val = psi(make_bank(w))
            assert 100.0 / 20.0 - 1e-9 <= val <= 100.0 + 1e-9


class TestTrigger:
    def test_uniform_never_triggers(self):
        bank = make_bank(np.full(8, 0.125))
        for kind in (CLASSICAL_MAP, PSI_MAP, PSI_MEAN):
            assert check_trigger(bank, RefinementStrategy(kind=kind)) is None

    def test_classical_triggers_on_dominant(self):
        mus = np.zeros((4, 3))
        mus[2] = [1e-3, 0, 0]
        bank = make_bank([0.0, 0.0, 1.0, 0.0], mus)
        center = check_trigger(bank, RefinementStrategy(kind=CLASSICAL_MAP, w_branch=0.5))
        assert np.allclose(center, [1e-3, 0, 0])

    def test_psi_arithmetic_examples(self):
        mus = np.array([[0.0, 0, 0], [2e-3, 0, 0]])
        strat = RefinementStrategy(kind=PSI_MEAN, psi_threshold=10.0)
        assert check_trigger(make_bank([0.5, 0.5], mus), strat) is None  # psi = 100
        # psi = 100 / (2 * (0.999^2 + 0.001^2)) ~ 50.1 > 10: still no trigger
        assert check_trigger(make_bank([0.999, 0.001], mus), strat) is None

    def test_psi_map_centers_on_map(self):
        n = 50
        w = np.full(n, 1e-4)
        w[7] = 1.0 - 1e-4 * (n - 1)
        mus = np.zeros((n, 3))
        mus[7] = [0, 5e-4, 0]
        center = check_trigger(make_bank(w, mus), RefinementStrategy(kind=PSI_MAP))
        assert np.allclose(center, [0, 5e-4, 0])

    def test_psi_mean_centers_on_mean(self):
        n = 50
        w = np.full(n, 1e-6)
        w[0] = w[1] = (1.0 - 1e-6 * (n - 2)) / 2.0
        mus = np.zeros((n, 3))
        mus[0] = [1e-3, 0, 0]
        mus[1] = [3e-3, 0, 0]
        center = check_trigger(make_bank(w, mus), RefinementStrategy(kind=PSI_MEAN))
        assert np.allclose(center, [2e-3, 0, 0], atol=1e-7)

    def test_budget_exhausted(self):
        w = np.zeros(4)
        w[0] = 1.0
        bank = make_bank(w)
        bank.refinements_done = 8
        assert check_trigger(bank, RefinementStrategy(kind=CLASSICAL_MAP, max_refinements=8)) is None


class TestRefine:
    def test_uniform_weights_and_full_psi(self):
        w = np.zeros(343)
        w[100] = 1.0
        bank = make_bank(w, generate_grid(np.zeros(3), 5e-3, 7))
        new = refine(bank, np.array([1e-3, 0, 0]), RefinementStrategy())
        assert len(new) == 343
        assert np.allclose(new.weights, 1.0 / 343.0)
        assert psi(new) == pytest.approx(100.0)

    def test_states_copied_from_map(self):
        bank = make_bank([0.1, 0.8, 0.1])
        bank.q[1] = rot.rotvec_to_quat(np.array([0.1, 0, 0]))
        bank.omega[1] = [1e-2, 0, 0]
        new = refine(bank, np.zeros(3), RefinementStrategy())
        assert np.allclose(new.q, bank.q[1])
        assert np.allclose(new.omega, bank.omega[1])

    def test_half_width_recurrence(self):
        strat = RefinementStrategy(shrink=0.5)
        bank = make_bank(np.full(27, 1.0 / 27.0), generate_grid(np.zeros(3), 5e-3, 3))
        bank.n_axis = 3
        hw = bank.half_width
        for k in range(1, 4):
            bank = refine(bank, np.zeros(3), strat)
            assert bank.half_width == pytest.approx(hw * 0.5**k)
            assert bank.refinements_done == k

    def test_half_width_floor(self):
        # below the floor the grid recenters without shrinking further
        strat = RefinementStrategy(shrink=0.5, min_half_width=2e-3)
        bank = make_bank(np.full(27, 1.0 / 27.0), generate_grid(np.zeros(3), 5e-3, 3))
        bank.n_axis = 3
        for expected in (2.5e-3, 2e-3, 2e-3):
            bank = refine(bank, np.zeros(3), strat)
            assert bank.half_width == pytest.approx(expected)


class TestWeightedMean:
    def test_single(self):
        bank = make_bank([1.0], np.array([[1e-3, -2e-3, 0]]))
        assert np.allclose(weighted_mean_misalignment(bank), [1e-3, -2e-3, 0])

    def test_symmetric_grid_gives_center(self):
        center = np.array([5e-4, -5e-4, 1e-3])
        mus = generate_grid(center, 2e-3, 5)
        bank = make_bank(np.full(len(mus), 1.0 / len(mus)), mus)
        assert np.allclose(weighted_mean_misalignment(bank), center, atol=1e-12)

    def test_convex_combination(self):
        mus = np.array([[0.0, 0, 0], [4e-3, 0, 0]])
        bank = make_bank([0.25, 0.75], mus)
        assert np.allclose(weighted_mean_misalignment(bank), [3e-3, 0, 0])

    def test_stays_in_hull(self):
        rng = np.random.default_rng(8)
        mus = rng.uniform(-1e-3, 1e-3, (30, 3))
        w = rng.random(30)
        w /= w.sum()
        mean = weighted_mean_misalignment(make_bank(w, mus))
        assert np.all(mean >= mus.min(axis=0) - 1e-15)
        assert np.all(mean <= mus.max(axis=0) + 1e-15)


class TestIdentifiability:
    def test_map_locks_onto_true_lattice_point(self):
        # true offset placed exactly on a lattice node, zero gyro noise:
        # the MAP hypothesis finds it within 500 steps in >= 95% of runs
        cfg = SimConfig().validate()
        nc = cfg.noise_config()
        j = cfg.inertia()
        tq = cfg.torque_profile()
        cat = cfg.catalog()
        nm = cfg.noise_model()
        gm = GyroModel(sigma_g=0.0)
        spacing = 2 * cfg.grid.half_width_rad / (cfg.grid.n_axis - 1)
        mu_true = np.array([spacing, -spacing, 2 * spacing])
        hits = 0
        for run in range(20):
            rng = np.random.default_rng(1000 + run)
            truth = TruthState(q=rot.qnormalize(rng.normal(size=4)), omega=cfg.truth.omega0.copy(),
                               bias=np.zeros(3), mis=mu_true.copy())
            v1, v2 = measure_vectors(truth, cat, nm, rng)
            q0 = triad(cat.v1_i, cat.v2_i, v1, v2)
            bank = HypothesisBank.from_grid(np.zeros(3), cfg.grid.half_width_rad, cfg.grid.n_axis,
                                            q0, measure_gyro(truth, gm, rng), np.zeros(3), nc)
            i_true = int(np.argmin(np.linalg.norm(bank.mus - mu_true, axis=1)))
            assert np.allclose(bank.mus[i_true], mu_true, atol=1e-12)
            for k in range(500):
                t = k * 0.5
                truth = propagate_truth(truth, j, tq, t, 0.5)
                v1, v2 = measure_vectors(truth, cat, nm, rng)
                qm = triad(cat.v1_i, cat.v2_i, v1, v2, ref=q0)
                wm = measure_gyro(truth, gm, rng)
                bank.q, bank.omega, bank.bias, bank.p = bank_predict(
                    bank.q, bank.omega, bank.bias, bank.p, j, nc.q, 0.5, tq, t)
                bank.q, bank.omega, bank.bias, bank.p, res = bank_update(
                    bank.q, bank.omega, bank.bias, bank.p, qm, wm, bank.mount_quats, nc.r)
                update_weights(bank, res, nc.r)
            if bank.map_index == i_true:
                hits += 1
        assert hits >= 19
