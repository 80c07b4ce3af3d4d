import numpy as np
import pytest

from calibench.regress import RigidTransform, fit_rigid, rigid_loss


def rot_z(deg):
    a = np.radians(deg)
    return np.array([[np.cos(a), -np.sin(a), 0.0],
                     [np.sin(a), np.cos(a), 0.0],
                     [0.0, 0.0, 1.0]])


@pytest.fixture
def cloud():
    return np.random.default_rng(0).uniform(0, 75, (60, 3))


class TestFitRigid:
    def test_identity_pairs(self, cloud):
        tf = fit_rigid(cloud, cloud)
        assert np.allclose(tf.rotation, np.eye(3), atol=1e-12)
        assert np.allclose(tf.translation, 0.0, atol=1e-10)

    def test_recovers_exact_rigid_map(self, cloud):
        R = rot_z(90.0)
        t = np.array([1.0, 2.0, 3.0])
        tf = fit_rigid(cloud, cloud @ R.T + t)
        assert np.abs(tf.rotation - R).max() < 1e-9
        assert np.abs(tf.translation - t).max() < 1e-9

    def test_beats_random_perturbations(self, cloud):
        # local optimality oracle: no jiggled (R, t) does better
        rng = np.random.default_rng(1)
        R = rot_z(30.0)
        t = np.array([5.0, -3.0, 1.0])
        B = cloud @ R.T + t + rng.normal(0, 0.5, cloud.shape)
        tf = fit_rigid(cloud, B)
        best = rigid_loss(tf, cloud, B)
        for _ in range(1000):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            ang = rng.uniform(-0.05, 0.05)
            K = np.array([[0, -axis[2], axis[1]],
                          [axis[2], 0, -axis[0]],
                          [-axis[1], axis[0], 0]])
            Rp = tf.rotation @ (np.eye(3) + np.sin(ang) * K + (1 - np.cos(ang)) * K @ K)
            tp = tf.translation + rng.normal(0, 0.05, 3)
            perturbed = RigidTransform(Rp / np.cbrt(np.linalg.det(Rp)), tp)
            assert rigid_loss(perturbed, cloud, B) >= best - 1e-9

    def test_orthogonal_under_heavy_noise(self, cloud):
        rng = np.random.default_rng(2)
        B = cloud @ rot_z(45).T + rng.normal(0, 10.0, cloud.shape)
        tf = fit_rigid(cloud, B)
        assert np.abs(tf.rotation.T @ tf.rotation - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(tf.rotation) - 1.0) < 1e-12

    def test_reflection_corrected(self):
        # mirrored targets must still produce a proper rotation
        rng = np.random.default_rng(3)
        A = rng.normal(size=(40, 3))
        B = A * np.array([1.0, 1.0, -1.0])
        tf = fit_rigid(A, B)
        assert abs(np.linalg.det(tf.rotation) - 1.0) < 1e-12

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_rigid(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_collinear_rejected(self):
        line = np.outer(np.linspace(0, 1, 10), [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            fit_rigid(line, line)

    def test_coincident_rejected(self):
        pts = np.ones((5, 3))
        with pytest.raises(ValueError):
            fit_rigid(pts, pts)
