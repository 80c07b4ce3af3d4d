"""Coarse data collection: random workspace sweeps watched by the stereo rig.

Trajectories start at a workspace corner, head for a random target in ~1 mm
steps, and pause at every step; each pause yields the translation waypoint
plus three extra waypoints with random orientations at the same position.
Records where both cameras saw the marker (and agree on where it was) are
triangulated into training samples mapping camera pose to commanded base
position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._seeds import as_seed_sequence
from .stereocam import Detection, OcclusionModel, StereoRig, DEFAULT_RIG, DEFAULT_OCCLUSION, \
    lateral_positions, detect_marker, triangulate
from .worldsim import (BasePosition, BiasField, FrameOffset, IDENTITY_OFFSET, Orientation,
                       Workspace, DEFAULT_WORKSPACE, DEFAULT_MEASUREMENT_NOISE_MM,
                       execute_command, random_orientation)

DEFAULT_STEP_MM = 1.0
# Pause budget per trajectory; keeps a default 57-trajectory collection near
# the canonical raw-count scale of a few thousand records.
DEFAULT_MAX_PAUSES = 25
DEFAULT_CONSISTENCY_TOL_MM = 2.0
ROTATIONS_PER_PAUSE = 3


@dataclass(frozen=True)
class Sample:
    """One training row: 6 inputs (camera position + angles), 3 targets."""

    input: np.ndarray    # (6,) c_x, c_y, c_z, phi_y, phi_p, phi_r
    target: np.ndarray   # (3,) commanded base position

    def __post_init__(self):
        inp = np.asarray(self.input, dtype=float)
        tgt = np.asarray(self.target, dtype=float)
        if inp.shape != (6,) or tgt.shape != (3,):
            raise ValueError("sample must have 6 inputs and 3 targets")
        if not (np.all(np.isfinite(inp)) and np.all(np.isfinite(tgt))):
            raise ValueError("sample values must be finite")
        Orientation(*inp[3:6])  # angle-range check
        object.__setattr__(self, "input", inp)
        object.__setattr__(self, "target", tgt)


@dataclass(frozen=True)
class Provenance:
    n_traj: int
    seed: int | None
    raw_count: int
    cleaned_count: int
    traj_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


@dataclass(frozen=True)
class CoarseDataset:
    """Cleaned training set: inputs (n, 6), targets (n, 3)."""

    inputs: np.ndarray
    targets: np.ndarray
    provenance: Provenance

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.inputs.shape[1] != 6:
            raise ValueError("inputs must have shape (n, 6)")
        if self.targets.shape != (len(self.inputs), 3):
            raise ValueError("targets must have shape (n, 3)")
        if self.provenance.cleaned_count > self.provenance.raw_count:
            raise ValueError("cleaned count cannot exceed raw count")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def retention(self) -> float:
        return self.provenance.cleaned_count / max(self.provenance.raw_count, 1)


@dataclass(frozen=True)
class RawRecord:
    """One waypoint as observed: the command, its orientation, what the
    cameras saw.  Ground truth for training is always the command."""

    traj_id: int
    command: BasePosition
    phi: Orientation
    detection: Detection


def gen_trajectory(seed, ws: Workspace = DEFAULT_WORKSPACE, *,
                   step_mm: float = DEFAULT_STEP_MM,
                   max_pauses: int = DEFAULT_MAX_PAUSES,
                   start=None, target=None
                   ) -> list[tuple[BasePosition, Orientation]]:
    """Waypoints of one corner-start sweep.

    The corner and the target are drawn from the seed (or forced through the
    keyword overrides); the straight segment is split into
    ceil(distance/step_mm) pauses, truncated at the pause budget.  Each pause
    emits the translation waypoint followed by three random-orientation
    waypoints at the same position.
    """
    rng = np.random.default_rng(seed)
    start = ws.floor_corners()[int(rng.integers(4))] if start is None \
        else np.asarray(start, dtype=float)
    target = rng.uniform(ws.lo, ws.hi) if target is None \
        else np.asarray(target, dtype=float)
    distance = float(np.linalg.norm(target - start))
    n_pauses = math.ceil(distance / step_mm)
    waypoints: list[tuple[BasePosition, Orientation]] = []
    if n_pauses == 0:
        return waypoints
    phi = random_orientation(rng)
    for i in range(1, min(n_pauses, max_pauses) + 1):
        pos = BasePosition.from_array(start + (i / n_pauses) * (target - start))
        waypoints.append((pos, phi))
        for _ in range(ROTATIONS_PER_PAUSE):
            phi = random_orientation(rng)
            waypoints.append((pos, phi))
    return waypoints


def collect(n_traj: int, field_: BiasField, rig: StereoRig = DEFAULT_RIG, seed=0, *,
            ws: Workspace = DEFAULT_WORKSPACE, step_mm: float = DEFAULT_STEP_MM,
            max_pauses: int = DEFAULT_MAX_PAUSES,
            noise_sigma: float = DEFAULT_MEASUREMENT_NOISE_MM,
            occ: OcclusionModel = DEFAULT_OCCLUSION,
            offset: FrameOffset = IDENTITY_OFFSET,
            trajectories: list[list[tuple[BasePosition, Orientation]]] | None = None
            ) -> list[RawRecord]:
    """Execute n_traj trajectories and record every waypoint observation.

    Per-trajectory seeds are derived from the top-level seed, so trajectories
    are independent of collection order.  Pass `trajectories` to observe a
    fixed waypoint plan instead of generating one.
    """
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    root = as_seed_sequence(seed)
    traj_seeds = root.spawn(n_traj)
    records: list[RawRecord] = []
    for traj_id in range(n_traj):
        gen_ss, sim_ss = traj_seeds[traj_id].spawn(2)
        if trajectories is not None:
            waypoints = trajectories[traj_id]
        else:
            waypoints = gen_trajectory(gen_ss, ws, step_mm=step_mm, max_pauses=max_pauses)
        wp_seeds = sim_ss.spawn(len(waypoints))
        for wp_idx, (pos, phi) in enumerate(waypoints):
            exec_ss, detect_ss = wp_seeds[wp_idx].spawn(2)
            w = execute_command(pos, phi, field_, exec_ss, ws=ws, offset=offset,
                                noise_sigma=noise_sigma)
            det = detect_marker(w, phi, rig, detect_ss, occ)
            records.append(RawRecord(traj_id, pos, phi, det))
    return records


def clean(raw: list[RawRecord], rig: StereoRig = DEFAULT_RIG, *,
          consistency_tol: float = DEFAULT_CONSISTENCY_TOL_MM,
          seed: int | None = None) -> CoarseDataset:
    """Keep records both cameras saw and agree on; triangulate into samples.

    A record survives when both visibility flags are set and the lateral
    positions implied independently by each camera match within
    consistency_tol.  Exact duplicate rows are dropped.  An empty result is
    an error because nothing downstream can train on it.
    """
    inputs, targets, traj_ids = [], [], []
    seen: set[bytes] = set()
    for rec in raw:
        if not rec.detection.both_visible:
            continue
        pair = rec.detection.pixel_pair()
        if pair.disparity <= 0:
            continue
        from_left, from_right = lateral_positions(pair, rig)
        if float(np.linalg.norm(from_left - from_right)) > consistency_tol:
            continue
        cam = triangulate(pair, rig)
        row = np.concatenate([cam.as_array(), rec.phi.as_array()])
        key = np.concatenate([row, rec.command.as_array()]).tobytes()
        if key in seen:
            continue
        seen.add(key)
        inputs.append(row)
        targets.append(rec.command.as_array())
        traj_ids.append(rec.traj_id)
    if not inputs:
        raise ValueError("cleaning removed every record; no usable detections")
    prov = Provenance(n_traj=len({r.traj_id for r in raw}), seed=seed,
                      raw_count=len(raw), cleaned_count=len(inputs),
                      traj_ids=np.asarray(traj_ids, dtype=int))
    return CoarseDataset(np.asarray(inputs), np.asarray(targets), prov)
