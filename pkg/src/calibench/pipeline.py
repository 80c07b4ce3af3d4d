"""Stage runner: each stage reads its upstream artifacts from the output
directory, does its work, and writes plain-text artifacts back.

Stages only communicate through files, so any stage can be re-run alone as
long as its inputs exist; randomness comes from the master seed through the
per-stage derivation in scenario.stage_seed, so re-runs reproduce the
original full-pipeline results exactly.
"""
from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from . import persist
from .debridesim import format_trials_table, run_trials
from .evalbench import (BenchTable, PerYawRigid, bench_csv_lines, fit_per_yaw_rigid,
                        format_bench_table, full_table)
from .phase1 import clean, collect
from .phase2 import CombinedPredictor, collect_fine, make_grid, train_residual_forests
from .regress import MlpArch, format_sweep_table, hyperparam_sweep, sweep_csv_lines, train_mlp
from .scenario import ScenarioConfig, stage_seed
from .worldsim import YAW_TAGS

PIPELINE_VERSION = "1"

STAGE_ORDER = ("collect", "train", "fine", "bench", "debride")


class MissingArtifactError(Exception):
    """An upstream artifact is absent; carries the stage that produces it."""

    def __init__(self, path: Path, stage: str):
        super().__init__(f"missing artifact {path}; run the '{stage}' stage first")
        self.stage = stage
        self.path = path


def artifact_paths(out_dir: Path) -> dict[str, Path]:
    out = Path(out_dir)
    paths = {
        "bias": out / "bias_field.txt",
        "coarse": out / "coarse.csv",
        "mlp": out / "mlp.txt",
        "rigid": out / "rigid.txt",
        "sweep_csv": out / "sweep.csv",
        "sweep_txt": out / "sweep_top12.txt",
        "combined": out / "combined.txt",
        "bench_csv": out / "bench.csv",
        "bench_txt": out / "bench.txt",
        "debride_csv": out / "debride.csv",
        "debride_txt": out / "debride.txt",
        "manifest": out / "manifest.txt",
    }
    for yaw in YAW_TAGS:
        slug = persist.yaw_slug(yaw)
        paths[f"fine_{slug}"] = out / f"fine_{slug}.csv"
        paths[f"forest_{slug}"] = out / f"forest_{slug}.txt"
    return paths


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(path, stage)
    return path


def _say(quiet: bool, msg: str) -> None:
    if not quiet:
        print(msg)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def stage_collect(cfg: ScenarioConfig, out: Path, quiet: bool = False) -> None:
    paths = artifact_paths(out)
    ws = cfg.workspace()
    rig = cfg.rig()
    field = cfg.bias_field()
    persist.save_bias_field(field, paths["bias"])
    raw = collect(cfg.n_traj, field, rig, seed=stage_seed(cfg.master_seed, "collect"),
                  ws=ws, step_mm=cfg.step_mm, max_pauses=cfg.max_pauses,
                  noise_sigma=cfg.measurement_mm, occ=cfg.occlusion())
    ds = clean(raw, rig, consistency_tol=cfg.consistency_tol_mm, seed=cfg.master_seed)
    persist.save_coarse(ds, paths["coarse"])
    _say(quiet, f"collect: {len(raw)} raw -> {len(ds)} cleaned "
                f"(retention {ds.retention:.3f}) -> {paths['coarse']}")


def stage_train(cfg: ScenarioConfig, out: Path, quiet: bool = False) -> None:
    paths = artifact_paths(out)
    ds = persist.load_coarse(_require(paths["coarse"], "collect"))
    arch = MlpArch(cfg.hidden_layers, cfg.width, cfg.activation)
    model = train_mlp(ds, arch, cfg.epochs, seed=stage_seed(cfg.master_seed, "train"),
                      batch_size=cfg.batch_size, learning_rate=cfg.learning_rate)
    persist.save_mlp(model, paths["mlp"])
    rbt = fit_per_yaw_rigid(ds)
    persist.save_per_yaw_rigid(rbt.transforms, paths["rigid"])
    _say(quiet, f"train: {arch.label} for {cfg.epochs} epochs, final loss "
                f"{model.epoch_losses[-1]:.3f} mm^2 -> {paths['mlp']}")
    if cfg.sweep:
        rows = min(len(ds), cfg.sweep_max_rows)
        idx = np.random.default_rng(cfg.master_seed).permutation(len(ds))[:rows]
        data = (ds.inputs[idx], ds.targets[idx])
        results = hyperparam_sweep(data, epochs=cfg.sweep_epochs, k=cfg.cv_folds,
                                   seed=cfg.master_seed, batch_size=cfg.batch_size)
        paths["sweep_csv"].write_text("\n".join(sweep_csv_lines(results)) + "\n")
        paths["sweep_txt"].write_text(format_sweep_table(results) + "\n")
        _say(quiet, f"sweep: {len(results)} configs -> {paths['sweep_csv']}")


def stage_fine(cfg: ScenarioConfig, out: Path, quiet: bool = False) -> None:
    paths = artifact_paths(out)
    field = persist.load_bias_field(_require(paths["bias"], "collect"))
    mlp = persist.load_mlp(_require(paths["mlp"], "train"))
    ws = cfg.workspace()
    rig = cfg.rig()
    grid = make_grid(ws, rows=cfg.grid_rows, cols=cfg.grid_cols, margin=cfg.grid_margin_mm)
    fine = collect_fine(mlp, grid, field, rig, seed=stage_seed(cfg.master_seed, "fine"),
                        ws=ws, noise_sigma=cfg.measurement_mm, hand_sigma=cfg.hand_mm,
                        hand_sigma_z=cfg.hand_z_mm, headroom=cfg.headroom_mm)
    forests = train_residual_forests(fine, n_trees=cfg.trees, max_depth=cfg.forest_depth,
                                     seed=stage_seed(cfg.master_seed, "fine").spawn(1)[0])
    forest_paths = {}
    for yaw in YAW_TAGS:
        slug = persist.yaw_slug(yaw)
        persist.save_fine({yaw: fine[yaw]}, paths[f"fine_{slug}"])
        persist.save_forest(forests[yaw], paths[f"forest_{slug}"])
        forest_paths[yaw] = paths[f"forest_{slug}"].name
    persist.save_combined_manifest(paths["mlp"].name, forest_paths, paths["combined"])
    excluded = sum(fine[yaw].excluded for yaw in YAW_TAGS)
    _say(quiet, f"fine: {sum(len(fine[y]) for y in YAW_TAGS)} residual samples "
                f"({excluded} excluded) -> {paths['combined']}")


def _load_combined(paths: dict[str, Path]) -> CombinedPredictor:
    mlp_name, forest_names = persist.load_combined_manifest(_require(paths["combined"], "fine"))
    base = paths["combined"].parent
    mlp = persist.load_mlp(_require(base / mlp_name, "train"))
    forests = {yaw: persist.load_forest(_require(base / name, "fine"))
               for yaw, name in forest_names.items()}
    return CombinedPredictor(mlp, forests)


def stage_bench(cfg: ScenarioConfig, out: Path, quiet: bool = False) -> BenchTable:
    paths = artifact_paths(out)
    field = persist.load_bias_field(_require(paths["bias"], "collect"))
    mlp = persist.load_mlp(_require(paths["mlp"], "train"))
    rbt = PerYawRigid(persist.load_per_yaw_rigid(_require(paths["rigid"], "train")))
    combined = _load_combined(paths)
    ws = cfg.workspace()
    rig = cfg.rig()
    grid = make_grid(ws, rows=cfg.grid_rows, cols=cfg.grid_cols, margin=cfg.grid_margin_mm)
    table = full_table({"RBT": rbt, "DNN": mlp, "DNN+RF": combined}, grid, field, rig,
                       seed=stage_seed(cfg.master_seed, "bench"), ws=ws,
                       noise_sigma=cfg.measurement_mm, headroom=cfg.headroom_mm)
    paths["bench_csv"].write_text("\n".join(bench_csv_lines(table)) + "\n")
    text = format_bench_table(table)
    paths["bench_txt"].write_text(text + "\n")
    _say(quiet, text)
    return table


def stage_debride(cfg: ScenarioConfig, out: Path, quiet: bool = False) -> None:
    paths = artifact_paths(out)
    field = persist.load_bias_field(_require(paths["bias"], "collect"))
    mlp = persist.load_mlp(_require(paths["mlp"], "train"))
    combined = _load_combined(paths)
    ws = cfg.workspace()
    rig = cfg.rig()
    kw = dict(field=field, rig=rig, ws=ws, noise_sigma=cfg.measurement_mm,
              p_slip=cfg.p_slip, tol_slack=cfg.tol_slack_mm,
              marginal_band=cfg.marginal_band_mm)
    seed = stage_seed(cfg.master_seed, "debride")
    tally_mlp = run_trials(cfg.kind, mlp, cfg.n_trials, seed=seed, **kw)
    tally_comb = run_trials(cfg.kind, combined, cfg.n_trials, seed=seed, **kw)
    text = format_trials_table(tally_mlp, tally_comb)
    paths["debride_txt"].write_text(f"fragments: {cfg.kind}\n" + text + "\n")
    csv = ["mapping,trial,slot,outcome,lateral_mm,yaw"]
    for name, tally in (("DNN", tally_mlp), ("DNN+RF", tally_comb)):
        for t, row in enumerate(tally.outcomes, start=1):
            for s, o in enumerate(row, start=1):
                csv.append(f"{name},{t},{s},{o.symbol},{o.lateral_error_mm:.17g},{o.yaw_used:g}")
    paths["debride_csv"].write_text("\n".join(csv) + "\n")
    _say(quiet, text)


STAGE_FUNCS = {
    "collect": stage_collect,
    "train": stage_train,
    "fine": stage_fine,
    "bench": stage_bench,
    "debride": stage_debride,
}

# Manifest keys written after a successful full run.
_MANIFEST_ARTIFACTS = (["coarse", "bias", "mlp", "rigid"]
                       + [f"fine_{persist.yaw_slug(y)}" for y in YAW_TAGS]
                       + [f"forest_{persist.yaw_slug(y)}" for y in YAW_TAGS]
                       + ["combined", "bench_csv", "bench_txt", "debride_csv", "debride_txt"])


def run_stage(name: str, cfg: ScenarioConfig, out_dir, quiet: bool = False) -> dict[str, float]:
    """Run one stage (or 'all'); returns per-stage durations in seconds."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    durations: dict[str, float] = {}
    stages = STAGE_ORDER if name == "all" else (name,)
    for stage in stages:
        t0 = time.perf_counter()
        STAGE_FUNCS[stage](cfg, out, quiet)
        durations[stage] = time.perf_counter() - t0
    if name == "all":
        write_manifest(cfg, out, durations)
    return durations


def write_manifest(cfg: ScenarioConfig, out: Path, durations: dict[str, float]) -> None:
    paths = artifact_paths(out)
    lines = ["calibench-manifest v1",
             f"pipeline_version={PIPELINE_VERSION}",
             f"config_hash={cfg.config_hash()}"]
    for key in _MANIFEST_ARTIFACTS:
        path = paths[key]
        if not path.exists():
            raise MissingArtifactError(path, "all")
        lines.append(f"artifact_{key}={path.name}")
    if cfg.sweep:
        lines.append(f"artifact_sweep_csv={paths['sweep_csv'].name}")
    for stage, secs in durations.items():
        lines.append(f"duration_{stage}={secs:.3f}")
    paths["manifest"].write_text("\n".join(lines) + "\n")
