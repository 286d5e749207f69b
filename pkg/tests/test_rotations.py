import math

import numpy as np
import pytest

from starcal import rotations as rot

RNG = np.random.default_rng(20250810)


def random_quat(rng=RNG, n=None):
    return rot.qnormalize(rng.normal(size=4 if n is None else (n, 4)))


class TestQmult:
    def test_identity(self):
        q = random_quat()
        assert np.allclose(rot.qmult(rot.identity_quat(), q), q, atol=1e-14)
        assert np.allclose(rot.qmult(q, rot.identity_quat()), q, atol=1e-14)

    def test_inverse(self):
        q = random_quat()
        assert np.allclose(rot.qmult(q, rot.qconj(q)), rot.identity_quat(), atol=1e-14)

    def test_two_quarter_turns_about_x(self):
        # oracle: compose the two DCMs and convert back
        half = math.sqrt(0.5)
        q90 = np.array([half, 0.0, 0.0, half])
        expected = rot.dcm_to_q(rot.q_to_dcm(q90) @ rot.q_to_dcm(q90))
        got = rot.qmult(q90, q90)
        assert np.allclose(rot.sign_align(got, expected), expected, atol=1e-12)
        assert np.allclose(np.abs(got), [1.0, 0.0, 0.0, 0.0], atol=1e-12)

    def test_group_property(self):
        a = random_quat(n=1000)
        b = random_quat(n=1000)
        left = rot.q_to_dcm(rot.qmult(a, b))
        right = rot.q_to_dcm(a) @ rot.q_to_dcm(b)
        assert np.max(np.linalg.norm(left - right, axis=(-2, -1))) <= 1e-9

    def test_result_normalized(self):
        a = 3.0 * random_quat()
        b = 0.2 * random_quat()
        assert abs(np.linalg.norm(rot.qmult(a, b)) - 1.0) <= 1e-12


class TestQconj:
    def test_identity(self):
        assert np.allclose(rot.qconj(rot.identity_quat()), rot.identity_quat())

    def test_involution(self):
        q = random_quat()
        assert np.allclose(rot.qconj(rot.qconj(q)), q)

    def test_dcm_transpose(self):
        q = random_quat(n=100)
        assert np.allclose(rot.q_to_dcm(rot.qconj(q)),
                           np.swapaxes(rot.q_to_dcm(q), -1, -2), atol=1e-12)


class TestOmegaMatrix:
    def test_zero_rate(self):
        assert np.array_equal(rot.omega_matrix(np.zeros(3)), np.zeros((4, 4)))

    def test_antisymmetric(self):
        om = rot.omega_matrix(RNG.normal(size=3))
        assert np.allclose(om + om.T, 0.0)

    def test_constant_rate_integration(self):
        # closed-form axis-angle solution: 0.1 rad/s about x for 10 s = 1 rad
        scipy_linalg = pytest.importorskip("scipy.linalg")
        om = rot.omega_matrix(np.array([0.1, 0.0, 0.0]))
        q = scipy_linalg.expm(0.5 * om * 10.0) @ rot.identity_quat()
        expected = np.array([math.sin(0.5), 0.0, 0.0, math.cos(0.5)])
        assert np.allclose(q, expected, atol=1e-12)

    def test_matches_dcm_propagation(self):
        # d/dt C = -[w]x C  and  qdot = 0.5 Omega q must describe the same rotation
        scipy_linalg = pytest.importorskip("scipy.linalg")
        w = np.array([0.02, -0.05, 0.04])
        q = rot.qnormalize(scipy_linalg.expm(0.5 * rot.omega_matrix(w) * 7.0) @ rot.identity_quat())
        c = scipy_linalg.expm(-rot.skew(w) * 7.0)
        assert np.allclose(rot.q_to_dcm(q), c, atol=1e-10)


class TestSkew:
    def test_cross_action(self):
        assert np.allclose(rot.skew(np.array([1.0, 0, 0])) @ np.array([0, 1.0, 0]),
                           [0, 0, 1.0])
        v, u = RNG.normal(size=3), RNG.normal(size=3)
        assert np.allclose(rot.skew(v) @ u, np.cross(v, u))

    def test_self_annihilation(self):
        v = RNG.normal(size=3)
        assert np.allclose(rot.skew(v) @ v, 0.0, atol=1e-15)

    def test_traceless(self):
        assert np.trace(rot.skew(RNG.normal(size=3))) == 0.0


class TestCross3:
    def test_matches_numpy(self):
        a, b = RNG.normal(size=(50, 3)), RNG.normal(size=(50, 3))
        assert np.allclose(rot.cross3(a, b), np.cross(a, b))


class TestMrp:
    def test_identity(self):
        assert np.allclose(rot.q_to_mrp(rot.identity_quat()), 0.0)

    def test_quarter_angle_about_z(self):
        half = math.sqrt(0.5)
        q = np.array([0.0, 0.0, half, half])
        assert np.allclose(rot.q_to_mrp(q), [0.0, 0.0, math.tan(math.pi / 8.0)], atol=1e-12)

    def test_round_trip_mrp(self):
        p = RNG.uniform(-0.28, 0.28, size=(200, 3))  # ||p|| < 0.5
        assert np.max(np.abs(rot.q_to_mrp(rot.mrp_to_q(p)) - p)) <= 1e-10

    def test_round_trip_dcm(self):
        q = random_quat(n=1000)
        back = np.array([rot.dcm_to_q(c) for c in rot.q_to_dcm(q)])
        assert np.max(np.abs(rot.sign_align(back, q) - q)) <= 1e-10

    def test_shadow_singularity(self):
        with pytest.raises(rot.ShadowSingularity):
            rot.q_to_mrp(np.array([1.0, 0.0, 0.0, -1.0 + 1e-12]))

    def test_small_angle_linearization(self):
        for _ in range(50):
            axis = RNG.normal(size=3)
            axis /= np.linalg.norm(axis)
            theta = RNG.uniform(0.0, 1e-3)
            q = rot.rotvec_to_quat(theta * axis)
            assert np.linalg.norm(rot.q_to_mrp(q) - theta / 4.0 * axis) <= 1e-8

    def test_mrp_to_dcm_orthonormal(self):
        p = RNG.uniform(-0.3, 0.3, size=3)
        c = rot.mrp_to_dcm(p)
        assert np.linalg.norm(c @ c.T - np.eye(3)) <= 1e-10
        assert abs(np.linalg.det(c) - 1.0) <= 1e-10


class TestSignAlign:
    def test_fixed_point(self):
        q = random_quat()
        assert np.allclose(rot.sign_align(q, q), q)

    def test_flip(self):
        q = random_quat()
        assert np.allclose(rot.sign_align(-q, q), q)

    def test_non_negative_dot(self):
        q, ref = random_quat(n=100), random_quat(n=100)
        assert np.all(np.sum(rot.sign_align(q, ref) * ref, axis=-1) >= 0.0)


class TestRotationAction:
    def test_rotate_matches_dcm(self):
        q = random_quat(n=100)
        u = RNG.normal(size=(100, 3))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        assert np.max(np.abs(rot.rotate(q, u) - (rot.q_to_dcm(q) @ u[..., None])[..., 0])) <= 1e-10

    def test_rotvec_rotate_matches_quaternion_action(self):
        # active rotation by w == frame DCM of the conjugate quaternion
        w = RNG.normal(size=3) * 0.3
        v = RNG.normal(size=3)
        expected = rot.q_to_dcm(rot.qconj(rot.rotvec_to_quat(w))) @ v
        assert np.allclose(rot.rotvec_rotate(w, v), expected, atol=1e-12)

    def test_rotvec_to_quat_angle(self):
        w = np.array([0.0, 0.0, 0.3])
        q = rot.rotvec_to_quat(w)
        assert np.allclose(q, [0.0, 0.0, math.sin(0.15), math.cos(0.15)])
