"""Simulated ground-truth world for a cable-driven arm above a flat phantom.

The world owns three things: the reachable workspace box, a hidden smooth
bias field that corrupts every commanded position, and the execution of
commands (rigid frame offset + bias + measurement noise).  The bias field is
the quantity the calibration pipeline has to learn; it is deterministic in
(position, orientation) so that the error is repeatable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# Yaw set points used by the grasp planner and the per-yaw models.
YAW_TAGS = (-90.0, -45.0, 0.0, 45.0, 90.0)

# Orientation limits honoured during data collection (degrees).
YAW_RANGE = (-90.0, 90.0)
PITCH_RANGE = (-15.0, 25.0)
ROLL_RANGE = (-180.0, -150.0)

# Mid-range pose used when measuring field magnitude on the reference grid.
NOMINAL_PITCH = 5.0
NOMINAL_ROLL = -165.0

# Commands may overshoot the workspace box by this much before the safety
# envelope rejects them (physical rigs keep clearance for exactly this).
DEFAULT_HEADROOM_MM = 10.0

DEFAULT_MEASUREMENT_NOISE_MM = 0.1

# Monomial order used by BiasField.poly, over normalized coordinates.
MONOMIALS = ("1", "x", "y", "z", "xx", "yy", "zz", "xy", "xz", "yz")


def _as_vec3(p) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned reachable box, millimetres, with the camera mast height."""

    x_range: tuple[float, float] = (0.0, 75.0)
    y_range: tuple[float, float] = (0.0, 75.0)
    z_range: tuple[float, float] = (0.0, 10.0)
    camera_height: float = 190.5

    def __post_init__(self):
        for name, (lo, hi) in (("x", self.x_range), ("y", self.y_range), ("z", self.z_range)):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"{name}_range must be a finite non-empty interval, got ({lo}, {hi})")
        if not self.camera_height > self.z_range[1]:
            raise ValueError("camera_height must sit above the top of the z range")

    @property
    def lo(self) -> np.ndarray:
        return np.array([self.x_range[0], self.y_range[0], self.z_range[0]])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.x_range[1], self.y_range[1], self.z_range[1]])

    @property
    def span(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center_xy(self) -> tuple[float, float]:
        return (0.5 * (self.x_range[0] + self.x_range[1]),
                0.5 * (self.y_range[0] + self.y_range[1]))

    def floor_corners(self) -> list[np.ndarray]:
        """The four corners of the box at floor height, trajectory starts."""
        z = self.z_range[0]
        return [np.array([x, y, z])
                for x in self.x_range for y in self.y_range]


DEFAULT_WORKSPACE = Workspace()


@dataclass(frozen=True)
class BasePosition:
    """Tool position in the robot base frame, mm."""

    b_x: float
    b_y: float
    b_z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.b_x, self.b_y, self.b_z)):
            raise ValueError("base position components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.b_x, self.b_y, self.b_z])

    @classmethod
    def from_array(cls, a) -> "BasePosition":
        a = _as_vec3(a)
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class WorldPoint:
    """Point in the world frame (base frame composed with a fixed offset), mm."""

    w_x: float
    w_y: float
    w_z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.w_x, self.w_y, self.w_z)):
            raise ValueError("world point components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.w_x, self.w_y, self.w_z])

    @classmethod
    def from_array(cls, a) -> "WorldPoint":
        a = _as_vec3(a)
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Orientation:
    """End-effector yaw/pitch/roll in degrees, limited to collection ranges."""

    phi_y: float
    phi_p: float
    phi_r: float

    def __post_init__(self):
        for name, v, (lo, hi) in (("yaw", self.phi_y, YAW_RANGE),
                                  ("pitch", self.phi_p, PITCH_RANGE),
                                  ("roll", self.phi_r, ROLL_RANGE)):
            if not (math.isfinite(v) and lo <= v <= hi):
                raise ValueError(f"{name} {v} outside collection range [{lo}, {hi}]")

    def as_array(self) -> np.ndarray:
        return np.array([self.phi_y, self.phi_p, self.phi_r])


def random_orientation(rng: np.random.Generator) -> Orientation:
    """Uniform draw over the collection ranges."""
    return Orientation(rng.uniform(*YAW_RANGE), rng.uniform(*PITCH_RANGE), rng.uniform(*ROLL_RANGE))


@dataclass(frozen=True)
class FrameOffset:
    """Fixed known rigid map from base frame to world frame."""

    rotation: np.ndarray
    translation: np.ndarray

    @classmethod
    def identity(cls) -> "FrameOffset":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, p) -> np.ndarray:
        return self.rotation @ _as_vec3(p) + self.translation

    def rotate_back(self, v) -> np.ndarray:
        """Map a world-frame displacement into base-frame coordinates."""
        return self.rotation.T @ _as_vec3(v)

    def invert_point(self, w) -> np.ndarray:
        return self.rotation.T @ (_as_vec3(w) - self.translation)


IDENTITY_OFFSET = FrameOffset.identity()


# ---------------------------------------------------------------------------
# Bias field
# ---------------------------------------------------------------------------

# Energy shares of the calibrated field, measured on the reference grid.
# Seeded draws choose shapes; each block is then rescaled to a fixed share of
# the total mean-square so every seed poses a comparably hard problem.  Most
# of the budget sits in content a rotation+translation cannot express
# (centred quadratics and multi-cycle sinusoids in the lateral outputs); the
# affine, orientation-coupled and vertical parts stay small -- the first two
# are absorbed by a per-yaw rigid fit and the last is nearly invisible to an
# overhead camera, so budget spent there would only soften the problem.
_BLOCK_SHARES = {
    "affine": 0.01,
    "quad_lateral": 0.66,
    "sin_lateral": 0.24,
    "z_row": 0.05,
    "rotation": 0.04,
}
# z-linked inputs get small weights within their blocks for a different
# reason: depth is the noisiest observed coordinate over a thin z span, so
# strong z structure would be unlearnable rather than merely hard.
_POLY_INPUT_WEIGHTS = np.array([1.0, 1.0, 1.0, 0.3, 1.0, 1.0, 0.1, 1.0, 0.2, 0.2])
_SIN_PERIOD_RANGE_MM = (36.0, 44.0)
_AFFINE_COLS = slice(0, 4)
_QUAD_COLS = slice(4, 10)

# Reference grid used to pin the field magnitude: positions x yaw set points.
_RMS_GRID_SHAPE = (10, 10, 3)


def _monomials(pos_norm: np.ndarray) -> np.ndarray:
    """Degree <= 2 monomial columns for positions normalized to [-1, 1]^3.

    Centred normalization keeps the even-degree columns uncorrelated with the
    affine ones over the workspace, so the quadratic content genuinely
    survives a rigid fit."""
    x, y, z = pos_norm[:, 0], pos_norm[:, 1], pos_norm[:, 2]
    one = np.ones_like(x)
    return np.stack([one, x, y, z, x * x, y * y, z * z, x * y, x * z, y * z], axis=1)


@dataclass(frozen=True)
class BiasField:
    """Deterministic systematic command error, mm.

    bias(p, phi) = poly(normalized p) + per-axis sinusoid in p + gain * sin(phi).
    Pure function of its inputs; identical arguments always give identical bias.
    """

    poly: np.ndarray        # (3, 10) mm over MONOMIALS of the normalized position
    sin_amp: np.ndarray     # (3,) mm
    sin_freq: np.ndarray    # (3,) cycles per mm along the matching axis
    sin_phase: np.ndarray   # (3,) radians
    rot_gain: np.ndarray    # (3, 3) mm per unit (sin yaw, sin pitch, sin roll)
    norm_lo: np.ndarray     # (3,) mm, normalization origin
    norm_span: np.ndarray   # (3,) mm, normalization span
    target_rms: float
    seed: int

    def evaluate(self, positions, angles_deg) -> np.ndarray:
        """Bias vectors for (n, 3) positions and (n, 3) yaw/pitch/roll degrees."""
        p = np.atleast_2d(np.asarray(positions, dtype=float))
        a = np.atleast_2d(np.asarray(angles_deg, dtype=float))
        if p.shape != a.shape or p.shape[1] != 3:
            raise ValueError("positions and angles must both have shape (n, 3)")
        pos_norm = 2.0 * (p - self.norm_lo) / self.norm_span - 1.0
        out = _monomials(pos_norm) @ self.poly.T
        out += self.sin_amp * np.sin(2.0 * np.pi * self.sin_freq * p + self.sin_phase)
        out += np.sin(np.radians(a)) @ self.rot_gain.T
        return out

    def __call__(self, position, phi: Orientation) -> np.ndarray:
        pos = _as_vec3(position)
        ang = phi.as_array() if isinstance(phi, Orientation) else _as_vec3(phi)
        return self.evaluate(pos[None, :], ang[None, :])[0]

    def scaled(self, factor: float) -> "BiasField":
        return replace(self,
                       poly=self.poly * factor,
                       sin_amp=self.sin_amp * factor,
                       rot_gain=self.rot_gain * factor)

    @classmethod
    def zero(cls, ws: Workspace = DEFAULT_WORKSPACE) -> "BiasField":
        """All-zero field, useful as a perfectly calibrated world."""
        return cls(poly=np.zeros((3, 10)), sin_amp=np.zeros(3), sin_freq=np.zeros(3),
                   sin_phase=np.zeros(3), rot_gain=np.zeros((3, 3)),
                   norm_lo=ws.lo, norm_span=ws.span, target_rms=0.0, seed=0)

    @classmethod
    def constant(cls, vec, ws: Workspace = DEFAULT_WORKSPACE) -> "BiasField":
        """Field equal to a fixed vector everywhere."""
        poly = np.zeros((3, 10))
        poly[:, 0] = _as_vec3(vec)
        return cls(poly=poly, sin_amp=np.zeros(3), sin_freq=np.zeros(3),
                   sin_phase=np.zeros(3), rot_gain=np.zeros((3, 3)),
                   norm_lo=ws.lo, norm_span=ws.span, target_rms=0.0, seed=0)


def _reference_grid(ws: Workspace) -> tuple[np.ndarray, np.ndarray]:
    """(positions, angles) over a 10x10x3 lattice crossed with the yaw tags."""
    nx, ny, nz = _RMS_GRID_SHAPE
    xs = np.linspace(ws.x_range[0], ws.x_range[1], nx)
    ys = np.linspace(ws.y_range[0], ws.y_range[1], ny)
    zs = np.linspace(ws.z_range[0], ws.z_range[1], nz)
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    pts = np.repeat(pts, len(YAW_TAGS), axis=0)
    yaws = np.tile(np.asarray(YAW_TAGS), nx * ny * nz)
    angles = np.stack([yaws,
                       np.full_like(yaws, NOMINAL_PITCH),
                       np.full_like(yaws, NOMINAL_ROLL)], axis=1)
    return pts, angles


def grid_rms(field: BiasField, ws: Workspace = DEFAULT_WORKSPACE) -> float:
    """RMS of |bias| over the reference position grid crossed with yaw tags."""
    pts, angles = _reference_grid(ws)
    b = field.evaluate(pts, angles)
    return float(np.sqrt(np.mean(np.sum(b * b, axis=1))))


def make_bias_field(seed: int, target_rms: float = 4.55,
                    ws: Workspace = DEFAULT_WORKSPACE) -> BiasField:
    """Draw a seeded smooth bias field and rescale it to the requested RMS.

    The field mixes a degree-2 polynomial, one long-period sinusoid per axis,
    and a coupling proportional to the sines of the orientation angles.  The
    seeded draws fix the shapes; each coefficient block is then rescaled to
    its share of the energy budget, and a final global rescale pins the
    reference-grid RMS to target_rms exactly.
    """
    if not (math.isfinite(target_rms) and target_rms > 0):
        raise ValueError(f"target_rms must be positive, got {target_rms}")
    rng = np.random.default_rng(seed)
    poly_draw = rng.normal(0.0, 1.0, (3, 10)) * _POLY_INPUT_WEIGHTS
    amp_draw = rng.uniform(0.8, 1.2, 3)
    periods = rng.uniform(*_SIN_PERIOD_RANGE_MM, 3)
    sin_phase = rng.uniform(0.0, 2.0 * np.pi, 3)
    rot_draw = rng.normal(0.0, 1.0, (3, 3))

    pts, angles = _reference_grid(ws)
    pos_norm = 2.0 * (pts - ws.lo) / ws.span - 1.0
    mono = _monomials(pos_norm)
    sin_mat = np.sin(2.0 * np.pi * pts / periods + sin_phase)
    rot_mat = np.sin(np.radians(angles))

    affine = np.zeros((3, 10))
    affine[0:2, _AFFINE_COLS] = poly_draw[0:2, _AFFINE_COLS]
    affine[:, 0] = 0.0  # global offsets carry no information; see de-meaning below
    quad = np.zeros((3, 10))
    quad[0:2, _QUAD_COLS] = poly_draw[0:2, _QUAD_COLS]
    z_poly = np.zeros((3, 10))
    z_poly[2] = poly_draw[2]
    z_poly[2, 0] = 0.0

    # Mean-square of each block with its grid mean removed: the budget below
    # buys variation, not offsets a translation would simply absorb.
    def var_ms(contrib: np.ndarray) -> tuple[float, np.ndarray]:
        c = np.atleast_2d(contrib)
        mean = c.mean(axis=0)
        centered = c - mean
        return float(np.mean(np.sum(centered ** 2, axis=1))), mean

    target_sq = target_rms * target_rms
    sin_lat = sin_mat * amp_draw
    sin_lat[:, 2] = 0.0
    sin_z = np.zeros_like(sin_mat)
    sin_z[:, 2] = sin_mat[:, 2] * amp_draw[2]
    parts = {
        "affine": (mono @ affine.T),
        "quad_lateral": (mono @ quad.T),
        "sin_lateral": sin_lat,
        "z_row": (mono @ z_poly.T + sin_z),
        "rotation": (rot_mat @ rot_draw.T),
    }
    scales, mean_total = {}, np.zeros(3)
    for name, contrib in parts.items():
        ms, mean = var_ms(contrib)
        scales[name] = math.sqrt(_BLOCK_SHARES[name] * target_sq / ms)
        mean_total += scales[name] * mean

    poly = (affine * scales["affine"] + quad * scales["quad_lateral"]
            + z_poly * scales["z_row"])
    # Fold the block means into the constant column so the field is zero-mean
    # over the reference grid.
    poly[:, 0] -= mean_total
    sin_amp = np.array([amp_draw[0] * scales["sin_lateral"],
                        amp_draw[1] * scales["sin_lateral"],
                        amp_draw[2] * scales["z_row"]])
    raw = BiasField(poly=poly, sin_amp=sin_amp, sin_freq=1.0 / periods,
                    sin_phase=sin_phase, rot_gain=rot_draw * scales["rotation"],
                    norm_lo=ws.lo, norm_span=ws.span,
                    target_rms=target_rms, seed=seed)
    return raw.scaled(target_rms / grid_rms(raw, ws))


# ---------------------------------------------------------------------------
# Command execution
# ---------------------------------------------------------------------------

def contains(x_b: BasePosition, ws: Workspace = DEFAULT_WORKSPACE) -> bool:
    """True iff the commanded position lies within the workspace box."""
    p = x_b.as_array() if isinstance(x_b, BasePosition) else _as_vec3(x_b)
    return bool(np.all(p >= ws.lo) and np.all(p <= ws.hi))


def in_safety_envelope(x_b, ws: Workspace = DEFAULT_WORKSPACE,
                       headroom: float = DEFAULT_HEADROOM_MM) -> bool:
    """True iff a command is executable: workspace box inflated by headroom."""
    p = x_b.as_array() if isinstance(x_b, BasePosition) else _as_vec3(x_b)
    return bool(np.all(p >= ws.lo - headroom) and np.all(p <= ws.hi + headroom))


def execute_command(x_b: BasePosition, phi: Orientation, field: BiasField,
                    noise_seed, *, ws: Workspace = DEFAULT_WORKSPACE,
                    offset: FrameOffset = IDENTITY_OFFSET,
                    noise_sigma: float = DEFAULT_MEASUREMENT_NOISE_MM,
                    headroom: float = DEFAULT_HEADROOM_MM) -> WorldPoint:
    """Where the tool actually ends up for a commanded pose.

    Result = offset(x_b) + field(x_b, phi) + Gaussian measurement noise.
    Commands outside the safety envelope are rejected.
    """
    p = x_b.as_array()
    if not in_safety_envelope(p, ws, headroom):
        raise ValueError(f"command {p.tolist()} outside the safety envelope "
                         f"(workspace + {headroom} mm headroom)")
    rng = np.random.default_rng(noise_seed)
    eta = rng.normal(0.0, noise_sigma, 3) if noise_sigma > 0 else np.zeros(3)
    w = offset.apply(p) + field(p, phi) + eta
    return WorldPoint.from_array(w)
