"""Scenario configuration: one key=value file drives the whole pipeline.

The file is line oriented with [section] headers; parsing is strict (unknown
keys and malformed values are reported with their line numbers) and the
round trip parse(serialize(cfg)) == cfg holds exactly because floats are
written with 17 significant digits.

Seed scheme: every stage derives its randomness from the master seed through
numpy.random.SeedSequence([master_seed, STAGE_CODE]), so stages can be re-run
independently and still reproduce the full-pipeline run bit for bit.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields

import numpy as np

from .stereocam import OcclusionModel, StereoRig, calibrate_occlusion
from .worldsim import BiasField, Workspace, make_bias_field

STAGE_CODES = {"collect": 1, "train": 2, "fine": 3, "bench": 4, "debride": 5}


class ConfigError(Exception):
    """Unusable configuration; message carries the offending line numbers."""


def stage_seed(master_seed: int, stage: str) -> np.random.SeedSequence:
    if stage not in STAGE_CODES:
        raise ValueError(f"unknown stage {stage!r}")
    return np.random.SeedSequence([master_seed, STAGE_CODES[stage]])


@dataclass
class ScenarioConfig:
    # [run]
    master_seed: int = 0
    out_dir: str = "out"
    # [workspace]
    x_min: float = 0.0
    x_max: float = 75.0
    y_min: float = 0.0
    y_max: float = 75.0
    z_min: float = 0.0
    z_max: float = 10.0
    camera_height: float = 190.5
    # [bias]  (seed -1 means: follow the master seed)
    bias_seed: int = -1
    bias_target_rms: float = 4.55
    headroom_mm: float = 10.0
    # [rig]
    focal_px: float = 2152.65
    baseline_mm: float = 5.0
    image_width: int = 1920
    image_height: int = 1080
    principal_x: float = 960.0
    principal_y: float = 540.0
    # [detection]
    pixel_noise_px: float = 0.5
    joint_visibility: float = 0.369
    pitch_nominal: float = 5.0
    pitch_softness: float = 3.0
    # [noise]
    measurement_mm: float = 0.1
    hand_mm: float = 0.2
    hand_z_mm: float = 0.2
    # [phase1]
    n_traj: int = 57
    step_mm: float = 1.0
    max_pauses: int = 25
    consistency_tol_mm: float = 2.0
    # [mlp]
    hidden_layers: int = 3
    width: int = 300
    activation: str = "relu"
    epochs: int = 1000
    batch_size: int = 64
    learning_rate: float = 1e-3
    cv_folds: int = 10
    sweep: int = 0
    sweep_epochs: int = 150
    sweep_max_rows: int = 600
    # [forest]
    trees: int = 100
    max_depth: int = -1
    min_leaf: int = 1
    # [grid]
    grid_rows: int = 7
    grid_cols: int = 5
    grid_margin_mm: float = 7.5
    # [debride]
    kind: str = "pumpkin"
    n_trials: int = 15
    p_slip: float = 0.08
    tol_slack_mm: float = 1.0
    marginal_band_mm: float = 1.0

    # ------------------------------------------------------------------
    # Derived objects
    # ------------------------------------------------------------------

    def validate(self) -> None:
        sigmas = {"pixel_noise_px": self.pixel_noise_px, "measurement_mm": self.measurement_mm,
                  "hand_mm": self.hand_mm, "hand_z_mm": self.hand_z_mm}
        for name, v in sigmas.items():
            if v < 0:
                raise ConfigError(f"{name} must be >= 0, got {v}")
        if self.activation not in ("relu", "sigmoid", "tanh"):
            raise ConfigError(f"activation must be relu|sigmoid|tanh, got {self.activation!r}")
        if self.kind not in ("pumpkin", "raisin"):
            raise ConfigError(f"kind must be pumpkin|raisin, got {self.kind!r}")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be >= 2")
        if not 0 <= self.p_slip <= 1:
            raise ConfigError("p_slip must be in [0, 1]")
        if self.bias_target_rms <= 0:
            raise ConfigError("bias_target_rms must be positive")

    @property
    def effective_bias_seed(self) -> int:
        return self.master_seed if self.bias_seed < 0 else self.bias_seed

    @property
    def forest_depth(self) -> int | None:
        return None if self.max_depth < 0 else self.max_depth

    def workspace(self) -> Workspace:
        return Workspace((self.x_min, self.x_max), (self.y_min, self.y_max),
                         (self.z_min, self.z_max), self.camera_height)

    def rig(self) -> StereoRig:
        return StereoRig.above(self.workspace(), focal_px=self.focal_px,
                               baseline_mm=self.baseline_mm,
                               principal=(self.principal_x, self.principal_y),
                               image_size=(self.image_width, self.image_height))

    def occlusion(self) -> OcclusionModel:
        return calibrate_occlusion(self.joint_visibility, self.pitch_nominal,
                                   self.pitch_softness, self.pixel_noise_px)

    def bias_field(self) -> BiasField:
        return make_bias_field(self.effective_bias_seed, self.bias_target_rms,
                               self.workspace())

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for section, keys in _SECTIONS:
            lines.append(f"[{section}]")
            for key, attr, typ in keys:
                v = getattr(self, attr)
                lines.append(f"{key}={_fmt_value(v, typ)}")
            lines.append("")
        return "\n".join(lines)

    def save(self, path) -> None:
        from pathlib import Path
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        cfg = cls()
        errors: list[str] = []
        section = None
        seen_attrs: set[str] = set()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1]
                if section not in _SECTION_KEYS:
                    errors.append(f"line {lineno}: unknown section [{section}]")
                    section = None
                continue
            if "=" not in line:
                errors.append(f"line {lineno}: expected key=value, got {line!r}")
                continue
            key, value = (s.strip() for s in line.split("=", 1))
            if section is None:
                errors.append(f"line {lineno}: key {key!r} outside any known section")
                continue
            entry = _SECTION_KEYS.get(section, {}).get(key)
            if entry is None:
                errors.append(f"line {lineno}: unknown key {key!r} in section [{section}]")
                continue
            attr, typ = entry
            try:
                setattr(cfg, attr, typ(value))
                seen_attrs.add(attr)
            except ValueError:
                errors.append(f"line {lineno}: cannot parse {value!r} as {typ.__name__} for {key!r}")
        if errors:
            raise ConfigError("config errors:\n  " + "\n  ".join(errors))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        from pathlib import Path
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def _fmt_value(v, typ) -> str:
    if typ is float:
        return f"{v:.17g}"
    return str(v)


# (section, [(file_key, attribute, type), ...]) in serialization order.
_SECTIONS: list[tuple[str, list[tuple[str, str, type]]]] = [
    ("run", [("master_seed", "master_seed", int), ("out_dir", "out_dir", str)]),
    ("workspace", [("x_min", "x_min", float), ("x_max", "x_max", float),
                   ("y_min", "y_min", float), ("y_max", "y_max", float),
                   ("z_min", "z_min", float), ("z_max", "z_max", float),
                   ("camera_height", "camera_height", float)]),
    ("bias", [("seed", "bias_seed", int), ("target_rms", "bias_target_rms", float),
              ("headroom_mm", "headroom_mm", float)]),
    ("rig", [("focal_px", "focal_px", float), ("baseline_mm", "baseline_mm", float),
             ("image_width", "image_width", int), ("image_height", "image_height", int),
             ("principal_x", "principal_x", float), ("principal_y", "principal_y", float)]),
    ("detection", [("pixel_noise_px", "pixel_noise_px", float),
                   ("joint_visibility", "joint_visibility", float),
                   ("pitch_nominal", "pitch_nominal", float),
                   ("pitch_softness", "pitch_softness", float)]),
    ("noise", [("measurement_mm", "measurement_mm", float), ("hand_mm", "hand_mm", float),
               ("hand_z_mm", "hand_z_mm", float)]),
    ("phase1", [("n_traj", "n_traj", int), ("step_mm", "step_mm", float),
                ("max_pauses", "max_pauses", int),
                ("consistency_tol_mm", "consistency_tol_mm", float)]),
    ("mlp", [("hidden_layers", "hidden_layers", int), ("width", "width", int),
             ("activation", "activation", str), ("epochs", "epochs", int),
             ("batch_size", "batch_size", int), ("learning_rate", "learning_rate", float),
             ("cv_folds", "cv_folds", int), ("sweep", "sweep", int),
             ("sweep_epochs", "sweep_epochs", int), ("sweep_max_rows", "sweep_max_rows", int)]),
    ("forest", [("trees", "trees", int), ("max_depth", "max_depth", int),
                ("min_leaf", "min_leaf", int)]),
    ("grid", [("rows", "grid_rows", int), ("cols", "grid_cols", int),
              ("margin_mm", "grid_margin_mm", float)]),
    ("debride", [("kind", "kind", str), ("n_trials", "n_trials", int),
                 ("p_slip", "p_slip", float), ("tol_slack_mm", "tol_slack_mm", float),
                 ("marginal_band_mm", "marginal_band_mm", float)]),
]

_SECTION_KEYS = {section: {key: (attr, typ) for key, attr, typ in keys}
                 for section, keys in _SECTIONS}
