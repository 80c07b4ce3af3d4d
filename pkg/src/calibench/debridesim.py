"""Fragment-removal task simulator.

Scenes hold eight elliptical fragments with known geometry; a grasp attempt
snaps the fragment angle to the nearest yaw set point, asks a calibration
predictor for the base command, executes it through the biased world, and
classifies the outcome purely from the resulting lateral error, the fragment
kind and a seeded slip draw.  Classification never looks at which predictor
produced the command, so rival calibrations can be compared blind.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._seeds import as_seed_sequence
from .stereocam import StereoRig, DEFAULT_RIG
from .worldsim import (BasePosition, BiasField, FrameOffset, IDENTITY_OFFSET, Orientation,
                       PITCH_RANGE, ROLL_RANGE, Workspace, DEFAULT_WORKSPACE,
                       DEFAULT_MEASUREMENT_NOISE_MM, YAW_TAGS, execute_command)

FRAGMENT_KINDS = ("pumpkin", "raisin")

# (length, width, thickness) means and standard deviations, mm.
FRAGMENT_DIMENSIONS = {
    "pumpkin": ((12.4, 0.8), (6.8, 0.3), (2.4, 0.3)),
    "raisin": ((12.3, 1.5), (5.9, 1.1), (4.2, 0.5)),
}

GRIPPER_OPENING_MM = 10.0
FRAGMENTS_PER_SCENE = 8
MIN_CLEARANCE_MM = 3.0

DEFAULT_SLIP_PROB = 0.08       # pumpkin seeds squirt out of an accurate grip
DEFAULT_TOL_SLACK_MM = 1.0     # tip capture slack beyond the half-width
DEFAULT_MARGINAL_BAND_MM = 1.0  # raisin one-tip snag band past the tolerance

OUTCOME_TAGS = ("Success", "TypeA", "TypeB", "TypeC")
OUTCOME_SYMBOLS = {"Success": "-", "TypeA": "A", "TypeB": "B", "TypeC": "C"}

# Hand-tuned pitch/roll paired with each yaw set point.  The two workspace-
# equivalent extremes get distinct poses on purpose.
DEFAULT_POSE_TABLE = {
    -90.0: (8.0, -172.0),
    -45.0: (4.0, -168.0),
    0.0: (2.0, -165.0),
    45.0: (4.0, -162.0),
    90.0: (10.0, -158.0),
}


def snap_yaw(angle: float) -> float:
    """Nearest yaw set point; exact midpoints round toward zero."""
    if not -90.0 <= angle <= 90.0:
        raise ValueError(f"angle {angle} outside [-90, 90]")
    return min(YAW_TAGS, key=lambda tag: (abs(angle - tag), abs(tag)))


def lookup_pitch_roll(yaw_tag: float, table: dict | None = None) -> tuple[float, float]:
    """Configured (pitch, roll) for one yaw set point."""
    table = DEFAULT_POSE_TABLE if table is None else table
    if yaw_tag not in table:
        raise ValueError(f"no pose entry for yaw {yaw_tag}; have {sorted(table)}")
    pitch, roll = table[yaw_tag]
    if not (PITCH_RANGE[0] <= pitch <= PITCH_RANGE[1] and ROLL_RANGE[0] <= roll <= ROLL_RANGE[1]):
        raise ValueError(f"pose ({pitch}, {roll}) outside collection ranges")
    return pitch, roll


@dataclass(frozen=True)
class Fragment:
    kind: str
    center: np.ndarray   # (3,) world mm, on the workspace floor
    length: float        # major axis
    width: float         # minor axis, the grasped direction
    thickness: float
    angle_deg: float     # major-axis orientation in [-90, 90)

    def __post_init__(self):
        if self.kind not in FRAGMENT_KINDS:
            raise ValueError(f"kind must be one of {FRAGMENT_KINDS}")
        (l_mu, l_sd), (w_mu, w_sd), (t_mu, t_sd) = FRAGMENT_DIMENSIONS[self.kind]
        for name, v, mu, sd in (("length", self.length, l_mu, l_sd),
                                ("width", self.width, w_mu, w_sd),
                                ("thickness", self.thickness, t_mu, t_sd)):
            if not mu - 3 * sd - 1e-9 <= v <= mu + 3 * sd + 1e-9:
                raise ValueError(f"{name} {v} outside 3-sigma range for {self.kind}")
        if self.width > GRIPPER_OPENING_MM:
            raise ValueError("fragment too wide for the gripper")
        if not -90.0 <= self.angle_deg < 90.0:
            raise ValueError(f"orientation {self.angle_deg} outside [-90, 90)")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    def grasp_tolerance(self, slack: float = DEFAULT_TOL_SLACK_MM) -> float:
        """Largest lateral miss that still lands both tips across the minor axis."""
        return 0.5 * self.width + slack


@dataclass(frozen=True)
class Scene:
    fragments: tuple[Fragment, ...]
    kind: str
    seed: int


def _draw_dims(kind: str, rng: np.random.Generator) -> tuple[float, float, float]:
    dims = []
    for mu, sd in FRAGMENT_DIMENSIONS[kind]:
        dims.append(float(np.clip(rng.normal(mu, sd), mu - 3 * sd, mu + 3 * sd)))
    return tuple(dims)


def gen_scene(kind: str, seed: int, ws: Workspace = DEFAULT_WORKSPACE, *,
              n_fragments: int = FRAGMENTS_PER_SCENE,
              clearance: float = MIN_CLEARANCE_MM,
              max_attempts: int = 10_000) -> Scene:
    """Rejection-sample non-overlapping fragments on the workspace floor.

    Clearance is enforced between bounding circles (major-axis radius), which
    is conservative for the true elliptical boundaries.
    """
    if kind not in FRAGMENT_KINDS:
        raise ValueError(f"kind must be one of {FRAGMENT_KINDS}")
    rng = np.random.default_rng(seed)
    placed: list[Fragment] = []
    attempts = 0
    z = ws.z_range[0]
    while len(placed) < n_fragments:
        attempts += 1
        if attempts > max_attempts:
            raise RuntimeError(f"could not place {n_fragments} fragments in "
                               f"{max_attempts} attempts; workspace too crowded")
        length, width, thickness = _draw_dims(kind, rng)
        angle = float(rng.uniform(-90.0, 90.0))
        if angle >= 90.0:
            angle = -90.0
        r = 0.5 * length
        lo = ws.lo[:2] + r
        hi = ws.hi[:2] - r
        cx, cy = rng.uniform(lo, hi)
        ok = True
        for other in placed:
            gap = math.hypot(cx - other.center[0], cy - other.center[1]) \
                - r - 0.5 * other.length
            if gap < clearance:
                ok = False
                break
        if ok:
            placed.append(Fragment(kind, np.array([cx, cy, z]), length, width,
                                   thickness, angle))
    return Scene(tuple(placed), kind, seed)


# ---------------------------------------------------------------------------
# Grasp attempts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Outcome:
    tag: str
    lateral_error_mm: float
    yaw_used: float

    def __post_init__(self):
        if self.tag not in OUTCOME_TAGS:
            raise ValueError(f"tag must be one of {OUTCOME_TAGS}")

    @property
    def symbol(self) -> str:
        return OUTCOME_SYMBOLS[self.tag]


def classify_outcome(lateral_error: float, kind: str, grasp_tol: float,
                     slip_draw: float, *, p_slip: float = DEFAULT_SLIP_PROB,
                     marginal_band: float = DEFAULT_MARGINAL_BAND_MM) -> str:
    """Outcome tag from the error alone; blind to the predictor identity.

    Beyond the tolerance the gripper simply misses (TypeA), except that a
    raisin within the marginal band past it can snag on one tip (TypeC).
    Within tolerance, pumpkin seeds may still slip away (TypeB, seeded
    Bernoulli); raisins hold.
    """
    if kind == "raisin":
        if lateral_error > grasp_tol + marginal_band:
            return "TypeA"
        if lateral_error > grasp_tol:
            return "TypeC"
        return "Success"
    if lateral_error > grasp_tol:
        return "TypeA"
    if slip_draw < p_slip:
        return "TypeB"
    return "Success"


def attempt_grasp(frag: Fragment, predictor, field: BiasField,
                  rig: StereoRig = DEFAULT_RIG, seed=0, *,
                  ws: Workspace = DEFAULT_WORKSPACE,
                  offset: FrameOffset = IDENTITY_OFFSET,
                  noise_sigma: float = DEFAULT_MEASUREMENT_NOISE_MM,
                  p_slip: float = DEFAULT_SLIP_PROB,
                  tol_slack: float = DEFAULT_TOL_SLACK_MM,
                  marginal_band: float = DEFAULT_MARGINAL_BAND_MM,
                  pose_table: dict | None = None) -> Outcome:
    """Plan, execute and judge one grasp.

    The predictor must expose predict_base(camera_position, orientation).
    """
    exec_ss, judge_ss = as_seed_sequence(seed).spawn(2)
    yaw = snap_yaw(frag.angle_deg)
    pitch, roll = lookup_pitch_roll(yaw, pose_table)
    phi = Orientation(yaw, pitch, roll)
    x_c = rig.camera_from_world(frag.center)
    x_b = predictor.predict_base(x_c, phi)
    reached = execute_command(BasePosition.from_array(x_b), phi, field, exec_ss,
                              ws=ws, offset=offset, noise_sigma=noise_sigma)
    err = math.hypot(reached.w_x - frag.center[0], reached.w_y - frag.center[1])
    slip_draw = float(np.random.default_rng(judge_ss).random())
    tag = classify_outcome(err, frag.kind, frag.grasp_tolerance(tol_slack), slip_draw,
                           p_slip=p_slip, marginal_band=marginal_band)
    return Outcome(tag, err, yaw)


@dataclass(frozen=True)
class TrialTally:
    """Outcome grid of n trials x 8 fragments plus the summary counts."""

    kind: str
    outcomes: tuple[tuple[Outcome, ...], ...]

    @property
    def total(self) -> int:
        return sum(len(row) for row in self.outcomes)

    def count(self, tag: str) -> int:
        return sum(1 for row in self.outcomes for o in row if o.tag == tag)

    @property
    def success_count(self) -> int:
        return self.count("Success")

    @property
    def success_fraction(self) -> float:
        return self.success_count / max(self.total, 1)

    def grid_lines(self) -> list[str]:
        return [",".join(o.symbol for o in row) for row in self.outcomes]

    def counts_line(self) -> str:
        return f"A:{self.count('TypeA')}, B:{self.count('TypeB')}, C:{self.count('TypeC')}"


def run_trials(kind: str, predictor, n_trials: int, seed=0, *,
               field: BiasField, rig: StereoRig = DEFAULT_RIG,
               ws: Workspace = DEFAULT_WORKSPACE,
               offset: FrameOffset = IDENTITY_OFFSET,
               noise_sigma: float = DEFAULT_MEASUREMENT_NOISE_MM,
               p_slip: float = DEFAULT_SLIP_PROB,
               tol_slack: float = DEFAULT_TOL_SLACK_MM,
               marginal_band: float = DEFAULT_MARGINAL_BAND_MM,
               pose_table: dict | None = None) -> TrialTally:
    """Run n_trials fresh scenes of eight fragments through one predictor."""
    if n_trials < 1:
        raise ValueError("need at least one trial")
    root = as_seed_sequence(seed)
    trial_seeds = root.spawn(n_trials)
    rows = []
    for trial in range(n_trials):
        scene_ss, grasp_root = trial_seeds[trial].spawn(2)
        scene = gen_scene(kind, scene_ss, ws)
        grasp_seeds = grasp_root.spawn(len(scene.fragments))
        row = []
        for frag, g_ss in zip(scene.fragments, grasp_seeds):
            row.append(attempt_grasp(frag, predictor, field, rig, g_ss, ws=ws,
                                     offset=offset, noise_sigma=noise_sigma,
                                     p_slip=p_slip, tol_slack=tol_slack,
                                     marginal_band=marginal_band, pose_table=pose_table))
        rows.append(tuple(row))
    return TrialTally(kind, tuple(rows))


def format_trials_table(left: TrialTally, right: TrialTally,
                        left_name: str = "DNN", right_name: str = "DNN+RF") -> str:
    """Side-by-side outcome grid with the counts footer."""
    if left.total != right.total or len(left.outcomes) != len(right.outcomes):
        raise ValueError("tallies must have matching shape")
    width = max(len(line) for line in left.grid_lines() + [left_name, left.counts_line()])
    lines = [f"{'Trial':<9}{left_name:<{width + 3}}{right_name}"]
    for i, (l_line, r_line) in enumerate(zip(left.grid_lines(), right.grid_lines()), start=1):
        lines.append(f"{i:<9}{l_line:<{width + 3}}{r_line}")
    lines.append(f"{'Count':<9}{left.counts_line():<{width + 3}}{right.counts_line()}")
    lines.append(f"{'Success':<9}{f'{left.success_count}/{left.total}':<{width + 3}}"
                 f"{right.success_count}/{right.total}")
    return "\n".join(lines)
