import numpy as np
import pytest

from calibench import persist
from calibench.persist import (FieldFormatError, TruncatedError, VersionError,
                               load_bias_field, load_coarse, load_combined_manifest,
                               load_fine, load_forest, load_mlp, load_per_yaw_rigid,
                               save_bias_field, save_coarse, save_combined_manifest,
                               save_fine, save_forest, save_mlp, save_per_yaw_rigid)
from calibench.phase2 import FineDataset, ResidualSample
from calibench.regress import MlpArch, fit_forest, fit_rigid, train_mlp
from calibench.worldsim import YAW_TAGS, make_bias_field


class TestCoarseDataset:
    def test_round_trip_preserves_rows_and_order(self, small_dataset, tmp_path):
        path = tmp_path / "coarse.csv"
        save_coarse(small_dataset, path)
        loaded = load_coarse(path)
        assert np.array_equal(loaded.inputs, small_dataset.inputs)
        assert np.array_equal(loaded.targets, small_dataset.targets)
        assert loaded.provenance.raw_count == small_dataset.provenance.raw_count
        assert loaded.provenance.n_traj == small_dataset.provenance.n_traj

    def test_truncated_row_detected(self, small_dataset, tmp_path):
        path = tmp_path / "coarse.csv"
        save_coarse(small_dataset, path)
        lines = path.read_text().splitlines()
        lines[3] = ",".join(lines[3].split(",")[:5])
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(TruncatedError):
            load_coarse(path)

    def test_wrong_header_detected(self, tmp_path):
        path = tmp_path / "coarse.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(VersionError):
            load_coarse(path)

    def test_non_numeric_detected(self, small_dataset, tmp_path):
        path = tmp_path / "coarse.csv"
        save_coarse(small_dataset, path)
        text = path.read_text().replace("0.", "0x", 1)
        path.write_text(text)
        with pytest.raises((FieldFormatError, TruncatedError)):
            load_coarse(path)


class TestMlp:
    def test_round_trip_identical_predictions(self, small_dataset, tmp_path):
        model = train_mlp(small_dataset, MlpArch(2, 30, "tanh"), epochs=5, seed=0)
        path = tmp_path / "mlp.txt"
        save_mlp(model, path)
        loaded = load_mlp(path)
        probe = np.random.default_rng(0).normal(size=(100, 6))
        assert np.array_equal(loaded.predict(probe), model.predict(probe))
        assert loaded.arch == model.arch
        assert loaded.epoch_losses == pytest.approx(model.epoch_losses)

    def test_truncated_file_detected(self, small_dataset, tmp_path):
        model = train_mlp(small_dataset, MlpArch(1, 20, "relu"), epochs=2, seed=0)
        path = tmp_path / "mlp.txt"
        save_mlp(model, path)
        lines = path.read_text().splitlines()
        (tmp_path / "cut.txt").write_text("\n".join(lines[:8]) + "\n")
        with pytest.raises((TruncatedError, FieldFormatError)):
            load_mlp(tmp_path / "cut.txt")

    def test_version_mismatch_detected(self, tmp_path):
        path = tmp_path / "mlp.txt"
        path.write_text("calibench-mlp v999\n")
        with pytest.raises(VersionError):
            load_mlp(path)


class TestForest:
    def test_round_trip_identical_predictions(self, tmp_path):
        rng = np.random.default_rng(1)
        X, Y = rng.normal(size=(40, 3)), rng.normal(size=(40, 3))
        model = fit_forest(X, Y, n_trees=12, seed=3)
        path = tmp_path / "forest.txt"
        save_forest(model, path)
        loaded = load_forest(path)
        probe = rng.normal(size=(30, 3))
        assert np.array_equal(loaded.predict(probe), model.predict(probe))

    def test_garbage_node_detected(self, tmp_path):
        rng = np.random.default_rng(2)
        model = fit_forest(rng.normal(size=(10, 3)), rng.normal(size=(10, 3)),
                           n_trees=2, seed=0)
        path = tmp_path / "forest.txt"
        save_forest(model, path)
        text = path.read_text().replace("\nl ", "\nq ", 1)
        path.write_text(text)
        with pytest.raises(FieldFormatError):
            load_forest(path)


class TestRigid:
    def test_per_yaw_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        A = rng.uniform(0, 75, (30, 3))
        transforms = {}
        for i, yaw in enumerate(YAW_TAGS):
            t = rng.normal(size=3)
            transforms[yaw] = fit_rigid(A, A + t)
        path = tmp_path / "rigid.txt"
        save_per_yaw_rigid(transforms, path)
        loaded = load_per_yaw_rigid(path)
        assert set(loaded) == set(YAW_TAGS)
        for yaw in YAW_TAGS:
            assert np.array_equal(loaded[yaw].rotation, transforms[yaw].rotation)
            assert np.array_equal(loaded[yaw].translation, transforms[yaw].translation)


class TestFine:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        datasets = {yaw: FineDataset(yaw, tuple(
            ResidualSample(rng.uniform(0, 75, 3), rng.normal(0, 1, 3))
            for _ in range(35))) for yaw in YAW_TAGS}
        path = tmp_path / "fine.csv"
        save_fine(datasets, path)
        loaded = load_fine(path)
        assert set(loaded) == set(YAW_TAGS)
        for yaw in YAW_TAGS:
            assert np.array_equal(loaded[yaw].predicted, datasets[yaw].predicted)
            assert np.array_equal(loaded[yaw].corrections, datasets[yaw].corrections)


class TestBiasField:
    def test_round_trip_bit_identical(self, tmp_path):
        field = make_bias_field(11, 4.55)
        path = tmp_path / "bias.txt"
        save_bias_field(field, path)
        loaded = load_bias_field(path)
        rng = np.random.default_rng(0)
        pos = rng.uniform(0, 70, (50, 3))
        ang = np.stack([rng.uniform(-90, 90, 50), rng.uniform(-15, 25, 50),
                        rng.uniform(-180, -150, 50)], axis=1)
        assert np.array_equal(loaded.evaluate(pos, ang), field.evaluate(pos, ang))
        assert loaded.seed == field.seed
        assert loaded.target_rms == field.target_rms

    def test_missing_field_detected(self, tmp_path):
        field = make_bias_field(11, 4.55)
        path = tmp_path / "bias.txt"
        save_bias_field(field, path)
        lines = [l for l in path.read_text().splitlines() if not l.startswith("rot_gain")]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(TruncatedError):
            load_bias_field(path)


class TestCombinedManifest:
    def test_round_trip(self, tmp_path):
        forests = {yaw: f"forest_{persist.yaw_slug(yaw)}.txt" for yaw in YAW_TAGS}
        path = tmp_path / "combined.txt"
        save_combined_manifest("mlp.txt", forests, path)
        mlp_name, loaded = load_combined_manifest(path)
        assert mlp_name == "mlp.txt"
        assert loaded == forests

    def test_missing_forest_detected(self, tmp_path):
        forests = {yaw: "x.txt" for yaw in YAW_TAGS[:-1]}
        path = tmp_path / "combined.txt"
        save_combined_manifest("mlp.txt", forests, path)
        with pytest.raises(TruncatedError):
            load_combined_manifest(path)
