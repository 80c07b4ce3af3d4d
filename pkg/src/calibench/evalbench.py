"""Calibration-grid benchmark: command each predictor to every circle under
each yaw setting, score the miss in left-camera pixels, tabulate.

The error metric is the pixel distance between the projections of the circle
centre and of the point actually reached, measured in the left image only,
so vertical misses are (mostly) invisible, exactly as a single overhead
photograph would see it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._seeds import as_seed_sequence
from .debridesim import lookup_pitch_roll, snap_yaw
from .phase2 import CalibrationGrid
from .regress.rigid import RigidTransform, fit_rigid
from .stereocam import StereoRig, DEFAULT_RIG, project
from .worldsim import (BasePosition, BiasField, FrameOffset, IDENTITY_OFFSET, Orientation,
                       WorldPoint, Workspace, DEFAULT_WORKSPACE, DEFAULT_HEADROOM_MM,
                       DEFAULT_MEASUREMENT_NOISE_MM, YAW_TAGS, execute_command)

RANDOM_YAW = "uniform"
YAW_SETTINGS = YAW_TAGS + (RANDOM_YAW,)

MAPPING_TAGS = ("RBT", "DNN", "DNN+RF")


def pixel_error(reached: WorldPoint, target: WorldPoint,
                rig: StereoRig = DEFAULT_RIG) -> float:
    """Left-image pixel distance between the reached point and the target."""
    pr = project(reached, rig).left
    pt = project(target, rig).left
    return math.hypot(pr[0] - pt[0], pr[1] - pt[1])


def mm_from_px(e_px: float, rig: StereoRig = DEFAULT_RIG) -> float:
    """Convert a pixel error to workspace millimetres at the floor plane."""
    if e_px < 0:
        raise ValueError("pixel error cannot be negative")
    return e_px / rig.px_per_mm


# ---------------------------------------------------------------------------
# Predictors beyond the learned ones
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerYawRigid:
    """Rigid camera-to-base map fitted separately for each yaw group.

    Only positions enter the fit; orientation is used solely to route a
    query to the transform of its nearest yaw set point.
    """

    transforms: dict[float, RigidTransform]

    def __post_init__(self):
        missing = [yaw for yaw in YAW_TAGS if yaw not in self.transforms]
        if missing:
            raise ValueError(f"missing transforms for yaw {missing}")

    def predict_base(self, x_c, phi: Orientation) -> np.ndarray:
        pos = x_c.as_array() if hasattr(x_c, "as_array") else np.asarray(x_c, float)
        return self.transforms[snap_yaw(phi.phi_y)].apply(pos)


def fit_per_yaw_rigid(dataset) -> PerYawRigid:
    """Group the coarse samples by nearest yaw and fit one rigid map each."""
    X = np.asarray(dataset.inputs, float)
    Y = np.asarray(dataset.targets, float)
    tags = np.array([snap_yaw(yaw) for yaw in X[:, 3]])
    transforms = {}
    for yaw in YAW_TAGS:
        mask = tags == yaw
        if np.sum(mask) < 3:
            raise ValueError(f"not enough samples near yaw {yaw} for a rigid fit")
        transforms[yaw] = fit_rigid(X[mask, :3], Y[mask])
    return PerYawRigid(transforms)


@dataclass(frozen=True)
class OracleInverse:
    """Perfect calibration: inverts the true bias field by fixed point.

    Useful as a benchmark floor; with noise off it reaches targets exactly.
    The iteration contracts because the field's spatial gradient stays below
    one; it stops once the update falls under the tolerance.
    """

    field: BiasField
    rig: StereoRig = DEFAULT_RIG
    offset: FrameOffset = IDENTITY_OFFSET
    max_iterations: int = 200
    tol: float = 1e-12

    def predict_base(self, x_c, phi: Orientation) -> np.ndarray:
        cam = x_c if hasattr(x_c, "as_array") else None
        if cam is None:
            from .stereocam import CameraPosition
            cam = CameraPosition.from_array(x_c)
        w = self.rig.world_from_camera(cam).as_array()
        x = self.offset.invert_point(w)
        for _ in range(self.max_iterations):
            nxt = self.offset.invert_point(w - self.field(x, phi))
            if float(np.max(np.abs(nxt - x))) < self.tol:
                return nxt
            x = nxt
        return x


@dataclass(frozen=True)
class OffsetPredictor:
    """Wrap a predictor and push every command by a fixed base-frame vector."""

    inner: object
    shift: np.ndarray

    def predict_base(self, x_c, phi: Orientation) -> np.ndarray:
        return self.inner.predict_base(x_c, phi) + np.asarray(self.shift, float)


# ---------------------------------------------------------------------------
# Benchmark rows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    mapping: str
    yaw_setting: str
    errors_px: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "errors_px", np.asarray(self.errors_px, dtype=float))

    @property
    def n(self) -> int:
        return len(self.errors_px)

    @property
    def mean_px(self) -> float:
        return float(np.mean(self.errors_px))

    @property
    def se_px(self) -> float:
        return float(np.std(self.errors_px, ddof=1) / math.sqrt(self.n))

    @property
    def median_px(self) -> float:
        return float(np.median(self.errors_px))

    @property
    def min_px(self) -> float:
        return float(np.min(self.errors_px))

    @property
    def max_px(self) -> float:
        return float(np.max(self.errors_px))


def _yaw_label(setting) -> str:
    return setting if isinstance(setting, str) else f"{setting:g}"


def benchmark(predictor, grid: CalibrationGrid, yaw_setting, field_: BiasField,
              rig: StereoRig = DEFAULT_RIG, seed=0, *,
              mapping: str = "model", ws: Workspace = DEFAULT_WORKSPACE,
              offset: FrameOffset = IDENTITY_OFFSET,
              noise_sigma: float = DEFAULT_MEASUREMENT_NOISE_MM,
              headroom: float = DEFAULT_HEADROOM_MM,
              pose_table: dict | None = None) -> BenchRow:
    """Visit every circle under one yaw setting and collect pixel errors.

    A numeric setting is used as-is; the uniform setting draws a fresh yaw
    per circle and snaps it to the nearest set point, which is also what the
    task planner does.
    """
    if yaw_setting != RANDOM_YAW and yaw_setting not in YAW_TAGS:
        raise ValueError(f"yaw setting must be one of {YAW_SETTINGS}")
    root = as_seed_sequence(seed)
    circle_seeds = root.spawn(len(grid))
    errors = []
    for center, c_ss in zip(grid.centers, circle_seeds):
        yaw_ss, exec_ss = c_ss.spawn(2)
        if yaw_setting == RANDOM_YAW:
            yaw = snap_yaw(float(np.random.default_rng(yaw_ss).uniform(-90.0, 90.0)))
        else:
            yaw = float(yaw_setting)
        pitch, roll = lookup_pitch_roll(yaw, pose_table)
        phi = Orientation(yaw, pitch, roll)
        target = WorldPoint.from_array(center)
        x_c = rig.camera_from_world(target)
        x_b = predictor.predict_base(x_c, phi)
        reached = execute_command(BasePosition.from_array(x_b), phi, field_, exec_ss,
                                  ws=ws, offset=offset, noise_sigma=noise_sigma,
                                  headroom=headroom)
        errors.append(pixel_error(reached, target, rig))
    return BenchRow(mapping, _yaw_label(yaw_setting), np.asarray(errors))


@dataclass(frozen=True)
class BenchTable:
    rows: tuple[BenchRow, ...]
    rig: StereoRig

    def mapping_rows(self, mapping: str) -> list[BenchRow]:
        return [r for r in self.rows if r.mapping == mapping]

    def mapping_mean_px(self, mapping: str) -> float:
        """Average of the per-setting mean errors for one mapping."""
        rows = self.mapping_rows(mapping)
        return float(np.mean([r.mean_px for r in rows]))

    def mapping_mean_mm(self, mapping: str) -> float:
        return mm_from_px(self.mapping_mean_px(mapping), self.rig)


def full_table(predictors: dict[str, object], grid: CalibrationGrid,
               field_: BiasField, rig: StereoRig = DEFAULT_RIG, seed=0, *,
               ws: Workspace = DEFAULT_WORKSPACE,
               offset: FrameOffset = IDENTITY_OFFSET,
               noise_sigma: float = DEFAULT_MEASUREMENT_NOISE_MM,
               headroom: float = DEFAULT_HEADROOM_MM,
               pose_table: dict | None = None) -> BenchTable:
    """Every mapping under every yaw setting: len(predictors) x 6 rows."""
    root = as_seed_sequence(seed)
    rows = []
    for mapping, predictor in predictors.items():
        for setting in YAW_SETTINGS:
            row_seed, = root.spawn(1)
            rows.append(benchmark(predictor, grid, setting, field_, rig, row_seed,
                                  mapping=mapping, ws=ws, offset=offset,
                                  noise_sigma=noise_sigma, headroom=headroom,
                                  pose_table=pose_table))
    return BenchTable(tuple(rows), rig)


def bench_csv_lines(table: BenchTable) -> list[str]:
    lines = ["mapping,yaw,n,mean_px,se_px,median_px,min_px,max_px,mean_mm"]
    for r in table.rows:
        lines.append(f"{r.mapping},{r.yaw_setting},{r.n},{r.mean_px:.17g},"
                     f"{r.se_px:.17g},{r.median_px:.17g},{r.min_px:.17g},"
                     f"{r.max_px:.17g},{mm_from_px(r.mean_px, table.rig):.17g}")
    return lines


def format_bench_table(table: BenchTable) -> str:
    """Aligned text table, one row per mapping x yaw setting."""
    header = f"{'Mapping':<9}{'Yaw':<10}{'Mean +/- SE':>16}  {'Med.':>7}  {'(Min, Max)':>16}"
    lines = [header, "-" * len(header)]
    for r in table.rows:
        lines.append(f"{r.mapping:<9}{r.yaw_setting:<10}"
                     f"{f'{r.mean_px:.1f} +/- {r.se_px:.1f}':>16}  "
                     f"{r.median_px:>7.1f}  "
                     f"{f'({r.min_px:.1f}, {r.max_px:.1f})':>16}")
    lines.append("-" * len(header))
    mappings = []
    for r in table.rows:
        if r.mapping not in mappings:
            mappings.append(r.mapping)
    for m in mappings:
        lines.append(f"{m:<9}average: {table.mapping_mean_px(m):.2f} px"
                     f" = {table.mapping_mean_mm(m):.2f} mm")
    return "\n".join(lines)
