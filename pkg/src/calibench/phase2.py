"""Fine calibration pass: grid touches, simulated hand corrections, and the
per-yaw residual forests stacked on top of the coarse model.

For each yaw set point the coarse model drives the tool to every circle of a
printed grid; the gap between where it stopped and the circle centre is
recorded (with a little hand noise) as a residual training pair.  A forest
per yaw then predicts that residual from the coarse model's own output, and
the combined predictor adds the two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._seeds import as_seed_sequence
from .debridesim import lookup_pitch_roll, snap_yaw
from .regress.forest import ForestModel, fit_forest
from .regress.mlp import MlpModel
from .stereocam import StereoRig, DEFAULT_RIG
from .worldsim import (BasePosition, BiasField, FrameOffset, IDENTITY_OFFSET, Orientation,
                       WorldPoint, Workspace, DEFAULT_WORKSPACE, DEFAULT_HEADROOM_MM,
                       DEFAULT_MEASUREMENT_NOISE_MM, YAW_TAGS, contains, execute_command,
                       in_safety_envelope)

GRID_ROWS = 7
GRID_COLS = 5
GRID_MARGIN_MM = 7.5
GRID_CIRCLES = GRID_ROWS * GRID_COLS

DEFAULT_HAND_NOISE_MM = 0.2
MAX_CORRECTION_MM = 20.0


@dataclass(frozen=True)
class CalibrationGrid:
    """The printed sheet of circles the tool is asked to touch."""

    centers: np.ndarray   # (35, 3) world mm on the workspace floor
    rows: int
    cols: int
    circle_radius_mm: float = 2.0  # display only

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        if c.shape != (GRID_CIRCLES, 3):
            raise ValueError(f"grid must hold exactly {GRID_CIRCLES} centers")
        d = np.linalg.norm(c[:, None, :] - c[None, :, :], axis=2)
        np.fill_diagonal(d, np.inf)
        if d.min() < 8.0:
            raise ValueError(f"circle centers too close: {d.min():.2f} mm")
        object.__setattr__(self, "centers", c)

    def __len__(self) -> int:
        return len(self.centers)


def make_grid(ws: Workspace = DEFAULT_WORKSPACE, *, rows: int = GRID_ROWS,
              cols: int = GRID_COLS, margin: float = GRID_MARGIN_MM) -> CalibrationGrid:
    """Rows x cols lattice on the workspace floor, inset by the margin."""
    xs = np.linspace(ws.x_range[0] + margin, ws.x_range[1] - margin, cols)
    ys = np.linspace(ws.y_range[0] + margin, ws.y_range[1] - margin, rows)
    z = ws.z_range[0]
    centers = np.array([[x, y, z] for y in ys for x in xs])
    for c in centers:
        if not contains(c, ws):
            raise ValueError("grid margin pushes circles outside the workspace")
    return CalibrationGrid(centers, rows, cols)


@dataclass(frozen=True)
class ResidualSample:
    """Where the coarse model said to go, and the hand correction it needed."""

    predicted: np.ndarray   # (3,) base-frame command from the coarse model
    correction: np.ndarray  # (3,) base-frame adjustment, mm

    def __post_init__(self):
        p = np.asarray(self.predicted, dtype=float)
        e = np.asarray(self.correction, dtype=float)
        if p.shape != (3,) or e.shape != (3,):
            raise ValueError("predicted and correction must be 3-vectors")
        norm = float(np.linalg.norm(e))
        if norm > MAX_CORRECTION_MM:
            raise ValueError(f"correction of {norm:.1f} mm exceeds the sanity bound; "
                             "the coarse model looks broken")
        object.__setattr__(self, "predicted", p)
        object.__setattr__(self, "correction", e)


@dataclass(frozen=True)
class FineDataset:
    """Residual pairs gathered at one yaw set point."""

    yaw_tag: float
    samples: tuple[ResidualSample, ...]
    excluded: int = 0   # predictions outside the safety envelope, skipped

    def __post_init__(self):
        if self.yaw_tag not in YAW_TAGS:
            raise ValueError(f"yaw tag {self.yaw_tag} not in {YAW_TAGS}")
        if len(self.samples) > GRID_CIRCLES:
            raise ValueError("more residual samples than grid circles")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def predicted(self) -> np.ndarray:
        return np.array([s.predicted for s in self.samples])

    @property
    def corrections(self) -> np.ndarray:
        return np.array([s.correction for s in self.samples])


def correction_oracle(reached: WorldPoint, target: WorldPoint, seed=0, *,
                      sigma: float = DEFAULT_HAND_NOISE_MM,
                      sigma_z: float | None = None,
                      offset: FrameOffset = IDENTITY_OFFSET) -> np.ndarray:
    """The adjustment a hand on the tool would apply, in base-frame mm.

    Exact gap from reached to target, expressed through the known frame
    offset, plus Gaussian hand noise (vertical noise configurable on its
    own because pressing into the phantom is more forgiving).
    """
    sigma_z = sigma if sigma_z is None else sigma_z
    delta = offset.rotate_back(target.as_array() - reached.as_array())
    rng = np.random.default_rng(seed)
    noise = np.array([rng.normal(0.0, sigma) if sigma > 0 else 0.0,
                      rng.normal(0.0, sigma) if sigma > 0 else 0.0,
                      rng.normal(0.0, sigma_z) if sigma_z > 0 else 0.0])
    return delta + noise


def collect_fine(mlp: MlpModel, grid: CalibrationGrid, field_: BiasField,
                 rig: StereoRig = DEFAULT_RIG, seed=0, *,
                 ws: Workspace = DEFAULT_WORKSPACE,
                 offset: FrameOffset = IDENTITY_OFFSET,
                 noise_sigma: float = DEFAULT_MEASUREMENT_NOISE_MM,
                 hand_sigma: float = DEFAULT_HAND_NOISE_MM,
                 hand_sigma_z: float | None = None,
                 headroom: float = DEFAULT_HEADROOM_MM,
                 pose_table: dict | None = None) -> dict[float, FineDataset]:
    """Touch every circle at every yaw set point and record the corrections.

    Commands the coarse model pushes outside the safety envelope are counted
    and skipped rather than clamped, since a clamped command would poison the
    residual data with positions that were never asked for.
    """
    root = as_seed_sequence(seed)
    yaw_seeds = root.spawn(len(YAW_TAGS))
    out: dict[float, FineDataset] = {}
    for yaw, yaw_ss in zip(YAW_TAGS, yaw_seeds):
        pitch, roll = lookup_pitch_roll(yaw, pose_table)
        phi = Orientation(yaw, pitch, roll)
        circle_seeds = yaw_ss.spawn(len(grid))
        samples: list[ResidualSample] = []
        excluded = 0
        for center, c_ss in zip(grid.centers, circle_seeds):
            exec_ss, hand_ss = c_ss.spawn(2)
            target = WorldPoint.from_array(center)
            x_c = rig.camera_from_world(target)
            x_b = mlp.predict_base(x_c, phi)
            if not in_safety_envelope(x_b, ws, headroom):
                excluded += 1
                continue
            reached = execute_command(BasePosition.from_array(x_b), phi, field_,
                                      exec_ss, ws=ws, offset=offset,
                                      noise_sigma=noise_sigma, headroom=headroom)
            eps = correction_oracle(reached, target, hand_ss, sigma=hand_sigma,
                                    sigma_z=hand_sigma_z, offset=offset)
            samples.append(ResidualSample(x_b, eps))
        out[yaw] = FineDataset(yaw, tuple(samples), excluded)
    return out


def train_residual_forests(datasets: dict[float, FineDataset], *,
                           n_trees: int = 100, max_depth: int | None = None,
                           seed=0, n_workers: int | None = None
                           ) -> dict[float, ForestModel]:
    """One forest per yaw set point, mapping coarse output to its correction."""
    missing = [yaw for yaw in YAW_TAGS if yaw not in datasets or len(datasets[yaw]) == 0]
    if missing:
        raise ValueError(f"missing or empty residual data for yaw {missing}")
    forest_seeds = as_seed_sequence(seed).spawn(len(YAW_TAGS))
    out: dict[float, ForestModel] = {}
    for yaw, f_ss in zip(YAW_TAGS, forest_seeds):
        ds = datasets[yaw]
        out[yaw] = fit_forest(ds.predicted, ds.corrections, n_trees, max_depth,
                              seed=f_ss, n_workers=n_workers)
    return out


@dataclass(frozen=True)
class CombinedPredictor:
    """Coarse model plus the per-yaw residual forest routed by nearest yaw."""

    mlp: MlpModel
    forests: dict[float, ForestModel]

    def __post_init__(self):
        missing = [yaw for yaw in YAW_TAGS if yaw not in self.forests]
        if missing:
            raise ValueError(f"missing forests for yaw {missing}")

    def predict_base(self, x_c, phi: Orientation) -> np.ndarray:
        base = self.mlp.predict_base(x_c, phi)
        forest = self.forests[snap_yaw(phi.phi_y)]
        return base + forest.predict(base)[0]


def combined_predict(cp: CombinedPredictor, x_c, phi: Orientation) -> np.ndarray:
    """Coarse prediction plus the learned residual for its nearest yaw."""
    return cp.predict_base(x_c, phi)
