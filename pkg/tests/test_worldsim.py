import numpy as np
import pytest

from calibench.worldsim import (BasePosition, BiasField, Orientation, Workspace, WorldPoint,
                                DEFAULT_WORKSPACE, contains, execute_command, grid_rms,
                                in_safety_envelope, make_bias_field)

NOMINAL = Orientation(0.0, 5.0, -165.0)


class TestWorkspace:
    def test_defaults_are_75mm_square(self):
        ws = Workspace()
        assert ws.x_range == (0.0, 75.0)
        assert ws.y_range == (0.0, 75.0)
        assert ws.camera_height > ws.z_range[1]

    def test_bad_ranges_rejected(self):
        with pytest.raises(ValueError):
            Workspace(x_range=(10.0, 10.0))
        with pytest.raises(ValueError):
            Workspace(z_range=(0.0, 200.0), camera_height=190.5)

    def test_orientation_collection_ranges(self):
        Orientation(90.0, 25.0, -150.0)
        with pytest.raises(ValueError):
            Orientation(91.0, 0.0, -165.0)
        with pytest.raises(ValueError):
            Orientation(0.0, 30.0, -165.0)
        with pytest.raises(ValueError):
            Orientation(0.0, 0.0, -140.0)


class TestBiasField:
    def test_rms_calibrated_to_target(self):
        field = make_bias_field(7, target_rms=4.55)
        assert 4.50 <= grid_rms(field) <= 4.60

    def test_rms_within_one_percent_many_seeds(self):
        for seed in range(12):
            field = make_bias_field(seed, 4.55)
            assert abs(grid_rms(field) - 4.55) <= 0.01 * 4.55

    def test_zero_target_rms_rejected(self):
        with pytest.raises(ValueError):
            make_bias_field(7, target_rms=0.0)

    def test_same_seed_bit_identical(self):
        a = make_bias_field(7, 4.55)
        b = make_bias_field(7, 4.55)
        for name in ("poly", "sin_amp", "sin_freq", "sin_phase", "rot_gain"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_repeatability_bit_equal_probes(self, default_field):
        rng = np.random.default_rng(42)
        pos = rng.uniform(DEFAULT_WORKSPACE.lo, DEFAULT_WORKSPACE.hi, (1000, 3))
        ang = np.stack([rng.uniform(-90, 90, 1000), rng.uniform(-15, 25, 1000),
                        rng.uniform(-180, -150, 1000)], axis=1)
        assert np.array_equal(default_field.evaluate(pos, ang),
                              default_field.evaluate(pos, ang))

    def test_smoothness_lipschitz_below_one(self, default_field):
        rng = np.random.default_rng(7)
        p = rng.uniform(DEFAULT_WORKSPACE.lo, DEFAULT_WORKSPACE.hi, (2000, 3))
        step = rng.normal(size=(2000, 3))
        step *= 0.5 / np.linalg.norm(step, axis=1, keepdims=True)
        ang = np.tile(NOMINAL.as_array(), (2000, 1))
        diff = default_field.evaluate(p + step, ang) - default_field.evaluate(p, ang)
        slopes = np.linalg.norm(diff, axis=1) / 0.5
        assert slopes.max() <= 1.0

    def test_depends_on_orientation(self, default_field):
        p = np.array([40.0, 40.0, 5.0])
        a = default_field(p, Orientation(-90.0, 5.0, -165.0))
        b = default_field(p, Orientation(90.0, 5.0, -165.0))
        assert np.linalg.norm(a - b) > 1e-6


class TestExecuteCommand:
    def test_zero_field_zero_noise_is_identity(self):
        w = execute_command(BasePosition(10, 20, 0), NOMINAL, BiasField.zero(), 0,
                            noise_sigma=0.0)
        assert np.allclose(w.as_array(), [10, 20, 0])

    def test_constant_field_adds_bias(self):
        w = execute_command(BasePosition(10, 20, 0), NOMINAL,
                            BiasField.constant((1, 0, 0)), 0, noise_sigma=0.0)
        assert np.allclose(w.as_array(), [11, 20, 0])

    def test_same_noise_seed_reproduces(self, default_field):
        a = execute_command(BasePosition(30, 30, 5), NOMINAL, default_field, 99)
        b = execute_command(BasePosition(30, 30, 5), NOMINAL, default_field, 99)
        assert a == b

    def test_safety_envelope(self):
        # workspace plus 10 mm headroom is commandable, beyond is not
        execute_command(BasePosition(-9.0, 20, 0), NOMINAL, BiasField.zero(), 0)
        with pytest.raises(ValueError):
            execute_command(BasePosition(-11.0, 20, 0), NOMINAL, BiasField.zero(), 0)

    def test_noise_magnitude(self, default_field):
        pts = np.array([execute_command(BasePosition(30, 30, 5), NOMINAL, default_field,
                                        s).as_array() for s in range(400)])
        std = pts.std(axis=0)
        assert np.all(std > 0.07) and np.all(std < 0.14)


class TestContains:
    def test_corner_inclusive(self):
        assert contains(BasePosition(0, 0, 0))

    def test_one_mm_past_edge(self):
        assert not contains(BasePosition(76, 0, 0))

    def test_center(self):
        assert contains(BasePosition(37.5, 37.5, 5))

    def test_envelope_wider_than_box(self):
        assert in_safety_envelope(np.array([80.0, 37.5, 5.0]))
        assert not in_safety_envelope(np.array([86.0, 37.5, 5.0]))
