import numpy as np
import pytest

from starcal import rotations as rot
from starcal.config import DEG
from starcal.dynamics import (
    SingularInertia,
    TorqueProfile,
    TruthState,
    check_inertia,
    kinetic_energy,
    momentum_norm,
    omega_dot,
    propagate_truth,
)

J = np.diag([100.0, 60.0, 50.0])
W0 = np.array([3.0, 4.4, -5.0]) * DEG


def make_state(q=None, omega=None):
    return TruthState(
        q=rot.identity_quat() if q is None else q,
        omega=W0.copy() if omega is None else omega,
        bias=np.zeros(3),
        mis=np.zeros(3),
    )


def euler_rhs_diagonal(w, jd):
    # independent oracle for diagonal inertia: wdot_i = (J_j - J_k)/J_i * w_j w_k
    jx, jy, jz = jd
    return np.array([
        (jy - jz) / jx * w[1] * w[2],
        (jz - jx) / jy * w[2] * w[0],
        (jx - jy) / jz * w[0] * w[1],
    ])


class TestOmegaDot:
    def test_equilibrium(self):
        assert np.allclose(omega_dot(np.zeros(3), J), 0.0)

    def test_principal_axis_spin(self):
        assert np.allclose(omega_dot(np.array([0.0, 0.0, 0.2]), J), 0.0, atol=1e-15)

    def test_reference_rates(self):
        # frozen from the diagonal-inertia oracle at the standard initial spin
        got = omega_dot(W0, J)
        oracle = euler_rhs_diagonal(W0, (100.0, 60.0, 50.0))
        assert np.allclose(got, oracle, atol=1e-15)
        assert np.allclose(got, [-6.7018e-4, 3.80775e-3, 3.21653e-3], rtol=1e-3)

    def test_damping_term(self):
        w = np.array([0.1, 0.0, 0.0])
        assert np.allclose(omega_dot(w, J, damping=0.6), euler_rhs_diagonal(w, (100, 60, 50)) - 0.6 * w / 100.0)

    def test_control_torque(self):
        mc = np.array([1.0, -2.0, 0.5])
        assert np.allclose(omega_dot(np.zeros(3), J, m_c=mc), np.linalg.solve(J, mc))

    def test_singular_inertia(self):
        with pytest.raises(SingularInertia):
            omega_dot(W0, np.zeros((3, 3)))
        with pytest.raises(SingularInertia):
            check_inertia(np.diag([1.0, 1.0, -1.0]))
        with pytest.raises(SingularInertia):
            check_inertia(np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))


class TestPropagate:
    def test_rest_is_fixed_point(self):
        st = make_state(omega=np.zeros(3))
        out = propagate_truth(st, J, TorqueProfile(), 0.0, 0.5)
        assert np.allclose(out.q, st.q) and np.allclose(out.omega, 0.0)

    def test_bias_and_misalignment_constant(self):
        st = TruthState(q=rot.identity_quat(), omega=W0.copy(),
                        bias=np.array([1e-3, 0, 0]), mis=np.array([0, 2e-3, 0]))
        out = propagate_truth(st, J, TorqueProfile(), 0.0, 0.5)
        assert np.array_equal(out.bias, st.bias) and np.array_equal(out.mis, st.mis)

    def test_energy_decay_under_damping(self):
        tq = TorqueProfile(damping=0.6, t_damp=0.0)
        st = make_state()
        e = kinetic_energy(st.omega, J)
        for k in range(20):
            st = propagate_truth(st, J, tq, k * 0.5, 0.5)
            e_new = kinetic_energy(st.omega, J)
            assert e_new < e
            e = e_new

    def test_quaternion_norm_contract(self):
        st = make_state()
        tq = TorqueProfile()
        for k in range(10000):
            st = propagate_truth(st, J, tq, k * 0.5, 0.5)
            if k % 1000 == 0:
                assert abs(np.linalg.norm(st.q) - 1.0) <= 1e-9
        assert abs(np.linalg.norm(st.q) - 1.0) <= 1e-9

    def test_conservation_torque_free(self):
        st = make_state()
        tq = TorqueProfile()
        e0, h0 = kinetic_energy(st.omega, J), momentum_norm(st.omega, J)
        for k in range(10000):  # 5000 s at 0.5 s
            st = propagate_truth(st, J, tq, k * 0.5, 0.5)
        assert abs(kinetic_energy(st.omega, J) - e0) / e0 <= 1e-6
        assert abs(momentum_norm(st.omega, J) - h0) / h0 <= 1e-6

    def test_fourth_order_convergence(self):
        def final(dt, t_end=10.0):
            st = make_state()
            for k in range(int(round(t_end / dt))):
                st = propagate_truth(st, J, TorqueProfile(), k * dt, dt)
            return st

        ref = final(0.5 / 64)
        err = []
        for dt in (0.5, 0.25):
            st = final(dt)
            err.append(np.linalg.norm(st.omega - ref.omega) + rot.quat_angle(st.q, ref.q))
        ratio = err[0] / err[1]
        assert 10.0 <= ratio <= 24.0  # 4th order gives ~16x per halving

    def test_spin_decay_after_activation(self):
        tq = TorqueProfile(damping=0.6, t_damp=50.0)
        st = make_state()
        prev = np.linalg.norm(st.omega)
        for k in range(300):  # 150 s, damping active from 50 s
            t = k * 0.5
            st = propagate_truth(st, J, tq, t, 0.5)
            n = np.linalg.norm(st.omega)
            if t >= 50.0:
                assert n <= prev + 1e-15
            prev = n

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            propagate_truth(make_state(), J, TorqueProfile(), 0.0, -0.5)


class TestTorqueProfile:
    def test_hard_switch(self):
        tq = TorqueProfile(damping=0.6, t_damp=4100.0)
        assert tq.damping_at(4099.9) == 0.0
        assert tq.damping_at(4100.0) == 0.6
