import hashlib
from pathlib import Path

import pytest

from calibench.cli import main
from calibench.scenario import ScenarioConfig


def fast_config(tmp_path, **overrides) -> Path:
    """Small but complete scenario: runs the whole pipeline in seconds."""
    cfg = ScenarioConfig()
    cfg.n_traj = 12
    cfg.bias_target_rms = 2.0
    cfg.hidden_layers = 1
    cfg.width = 30
    cfg.epochs = 300
    cfg.trees = 20
    cfg.n_trials = 2
    for key, value in overrides.items():
        setattr(cfg, key, value)
    path = tmp_path / "scenario.cfg"
    cfg.save(path)
    return path


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


REPORT_FILES = ("coarse.csv", "mlp.txt", "rigid.txt", "bench.csv", "bench.txt",
                "debride.csv", "debride.txt")


class TestStages:
    def test_all_produces_manifest_and_artifacts(self, tmp_path, capsys):
        cfg = fast_config(tmp_path)
        out = tmp_path / "out"
        assert main(["all", "--config", str(cfg), "--out-dir", str(out)]) == 0
        manifest = (out / "manifest.txt").read_text().splitlines()
        art = [line for line in manifest if line.startswith("artifact_")]
        assert sum(1 for a in art if "coarse" in a) == 1
        assert sum(1 for a in art if a.startswith("artifact_mlp")) == 1
        assert sum(1 for a in art if a.startswith("artifact_fine_")) == 5
        assert sum(1 for a in art if a.startswith("artifact_forest_")) == 5
        assert sum(1 for a in art if "bench" in a or "debride" in a) == 4  # 2 reports
        for line in art:
            assert (out / line.split("=", 1)[1]).exists()

    def test_bench_before_train_names_missing_stage(self, tmp_path, capsys):
        cfg = fast_config(tmp_path)
        out = tmp_path / "out"
        assert main(["collect", "--config", str(cfg), "--out-dir", str(out),
                     "--quiet"]) == 0
        rc = main(["bench", "--config", str(cfg), "--out-dir", str(out)])
        assert rc == 2
        assert "train" in capsys.readouterr().err

    def test_config_errors_exit_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[run]\nmaster_seed=maybe\n")
        assert main(["all", "--config", str(bad)]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_missing_config_file_exits_one(self, tmp_path):
        assert main(["all", "--config", str(tmp_path / "nope.cfg")]) == 1

    def test_usage_error_exits_one(self, capsys):
        assert main(["frobnicate"]) == 1
        assert main([]) == 1

    def test_numeric_failure_exits_three(self, tmp_path, capsys):
        import numpy as np
        cfg = fast_config(tmp_path, learning_rate=1e200)
        out = tmp_path / "out"
        with np.errstate(over="ignore", invalid="ignore"):
            assert main(["collect", "--config", str(cfg), "--out-dir", str(out),
                         "--quiet"]) == 0
            assert main(["train", "--config", str(cfg), "--out-dir", str(out),
                         "--quiet"]) == 3
        assert "numeric" in capsys.readouterr().err

    def test_quiet_suppresses_progress(self, tmp_path, capsys):
        cfg = fast_config(tmp_path)
        out = tmp_path / "out"
        main(["collect", "--config", str(cfg), "--out-dir", str(out), "--quiet"])
        assert capsys.readouterr().out == ""

    def test_seed_override_changes_artifacts(self, tmp_path):
        cfg = fast_config(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        main(["collect", "--config", str(cfg), "--out-dir", str(a), "--quiet"])
        main(["collect", "--config", str(cfg), "--out-dir", str(b), "--quiet",
              "--seed", "5"])
        assert digest(a / "coarse.csv") != digest(b / "coarse.csv")

    def test_optional_sweep_emits_tables(self, tmp_path):
        cfg = fast_config(tmp_path, sweep=1, sweep_epochs=2, sweep_max_rows=60,
                          cv_folds=2)
        out = tmp_path / "out"
        assert main(["collect", "--config", str(cfg), "--out-dir", str(out),
                     "--quiet"]) == 0
        assert main(["train", "--config", str(cfg), "--out-dir", str(out),
                     "--quiet"]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 25  # header + 24 configurations
        assert len((out / "sweep_top12.txt").read_text().splitlines()) == 13


class TestDeterminism:
    def test_two_runs_byte_identical(self, tmp_path):
        cfg = fast_config(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["all", "--config", str(cfg), "--out-dir", str(a), "--quiet"]) == 0
        assert main(["all", "--config", str(cfg), "--out-dir", str(b), "--quiet"]) == 0
        for name in REPORT_FILES:
            assert digest(a / name) == digest(b / name), name

    def test_rerunning_bench_is_isolated(self, tmp_path):
        cfg = fast_config(tmp_path)
        out = tmp_path / "out"
        assert main(["all", "--config", str(cfg), "--out-dir", str(out), "--quiet"]) == 0
        train_hashes = {n: digest(out / n) for n in
                        ("coarse.csv", "mlp.txt", "rigid.txt")}
        bench_hash = digest(out / "bench.csv")
        assert main(["bench", "--config", str(cfg), "--out-dir", str(out),
                     "--quiet"]) == 0
        for name, h in train_hashes.items():
            assert digest(out / name) == h
        assert digest(out / "bench.csv") == bench_hash

    def test_stage_by_stage_matches_all(self, tmp_path):
        cfg = fast_config(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["all", "--config", str(cfg), "--out-dir", str(a), "--quiet"]) == 0
        for stage in ("collect", "train", "fine", "bench", "debride"):
            assert main([stage, "--config", str(cfg), "--out-dir", str(b),
                         "--quiet"]) == 0
        for name in REPORT_FILES:
            assert digest(a / name) == digest(b / name), name
