import math

import numpy as np
import pytest

from calibench.evalbench import (BenchRow, OffsetPredictor, OracleInverse, PerYawRigid,
                                 RANDOM_YAW, YAW_SETTINGS, bench_csv_lines, benchmark,
                                 fit_per_yaw_rigid, format_bench_table, full_table,
                                 mm_from_px, pixel_error)
from calibench.phase2 import make_grid
from calibench.worldsim import Orientation, WorldPoint, YAW_TAGS


@pytest.fixture(scope="module")
def grid():
    return make_grid()


@pytest.fixture(scope="module")
def oracle(default_field, rig):
    return OracleInverse(default_field, rig)


class TestPixelError:
    def test_zero_when_on_target(self, rig):
        w = WorldPoint(30, 40, 0)
        assert pixel_error(w, w, rig) == 0.0

    def test_known_pixel_offsets(self, rig):
        # displacements worth 4 px and 32 px give a 32.25 px euclidean miss
        target = WorldPoint(37.5, 37.5, 0.0)
        reached = WorldPoint(37.5 + 4 / rig.px_per_mm, 37.5 - 32 / rig.px_per_mm, 0.0)
        expected = math.hypot(4.0, 32.0)  # sqrt(1040) ~ 32.249
        assert pixel_error(reached, target, rig) == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(32.25, abs=0.01)

    def test_one_mm_lateral(self, rig):
        target = WorldPoint(20, 20, 0)
        reached = WorldPoint(21, 20, 0)
        assert pixel_error(reached, target, rig) == pytest.approx(11.3, abs=0.3)

    def test_vertical_miss_nearly_invisible_at_center(self, rig):
        target = WorldPoint(37.5, 37.5, 0.0)
        reached = WorldPoint(37.5, 37.5, 2.0)
        assert pixel_error(reached, target, rig) < 0.5


class TestMmFromPx:
    def test_anchor_values(self, rig):
        assert mm_from_px(51.45, rig) == pytest.approx(4.55, abs=0.01)
        assert mm_from_px(24.13, rig) == pytest.approx(2.14, abs=0.01)

    def test_zero(self, rig):
        assert mm_from_px(0.0, rig) == 0.0

    def test_negative_rejected(self, rig):
        with pytest.raises(ValueError):
            mm_from_px(-1.0, rig)


class TestPerYawRigid:
    def test_fit_and_route(self, small_dataset):
        model = fit_per_yaw_rigid(small_dataset)
        assert set(model.transforms) == set(YAW_TAGS)
        x_c = small_dataset.inputs[0, :3]
        out_50 = model.predict_base(x_c, Orientation(50.0, 5.0, -165.0))
        out_45 = model.transforms[45.0].apply(x_c)
        assert np.array_equal(out_50, out_45)

    def test_requires_all_groups(self, small_dataset):
        narrow = type(small_dataset)(
            small_dataset.inputs[:5], small_dataset.targets[:5],
            small_dataset.provenance)
        with pytest.raises(ValueError):
            fit_per_yaw_rigid(narrow)


class TestBenchmark:
    def test_oracle_scores_zero_without_noise(self, oracle, grid, default_field, rig):
        row = benchmark(oracle, grid, 0.0, default_field, rig, seed=0, noise_sigma=0.0)
        assert row.n == 35
        assert row.mean_px < 1e-6

    def test_row_statistics_consistent(self, oracle, grid, default_field, rig):
        row = benchmark(OffsetPredictor(oracle, [1.0, 0.5, 0.0]), grid, 45.0,
                        default_field, rig, seed=1)
        e = row.errors_px
        assert row.mean_px == pytest.approx(float(np.mean(e)), abs=1e-15)
        assert row.se_px == pytest.approx(float(np.std(e, ddof=1) / math.sqrt(35)), abs=1e-15)
        assert row.median_px == pytest.approx(float(np.median(e)), abs=1e-15)
        assert row.min_px <= row.median_px <= row.max_px

    def test_random_yaw_setting(self, oracle, grid, default_field, rig):
        row = benchmark(oracle, grid, RANDOM_YAW, default_field, rig, seed=2,
                        noise_sigma=0.0)
        assert row.yaw_setting == RANDOM_YAW
        assert row.mean_px < 1e-6

    def test_unknown_setting_rejected(self, oracle, grid, default_field, rig):
        with pytest.raises(ValueError):
            benchmark(oracle, grid, 30.0, default_field, rig, seed=0)

    def test_deterministic(self, oracle, grid, default_field, rig):
        a = benchmark(oracle, grid, 0.0, default_field, rig, seed=9)
        b = benchmark(oracle, grid, 0.0, default_field, rig, seed=9)
        assert np.array_equal(a.errors_px, b.errors_px)


@pytest.fixture(scope="module")
def table(oracle, grid, default_field, rig):
    predictors = {"RBT": OffsetPredictor(oracle, [2.0, 0, 0]),
                  "DNN": OffsetPredictor(oracle, [1.0, 0, 0]),
                  "DNN+RF": oracle}
    return full_table(predictors, grid, default_field, rig, seed=5)


class TestFullTable:
    def test_eighteen_rows(self, table):
        assert len(table.rows) == 18
        assert [r.yaw_setting for r in table.rows[:6]] == \
            [f"{s:g}" for s in YAW_TAGS] + [RANDOM_YAW]

    def test_mm_is_px_over_scale(self, table, rig):
        for mapping in ("RBT", "DNN", "DNN+RF"):
            assert table.mapping_mean_mm(mapping) == pytest.approx(
                table.mapping_mean_px(mapping) / rig.px_per_mm, abs=1e-12)

    def test_injected_error_ladder_orders_means(self, table):
        assert table.mapping_mean_px("DNN+RF") < table.mapping_mean_px("DNN") \
            < table.mapping_mean_px("RBT")

    def test_csv_shape(self, table):
        lines = bench_csv_lines(table)
        assert len(lines) == 19
        assert lines[0].split(",")[0] == "mapping"

    def test_text_table_layout(self, table):
        text = format_bench_table(table)
        lines = text.splitlines()
        assert any("Mean +/- SE" in line for line in lines)
        assert sum(1 for line in lines if line.startswith(("RBT", "DNN"))) >= 18
