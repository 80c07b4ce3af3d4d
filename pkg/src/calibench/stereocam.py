"""Rectified pinhole stereo pair looking straight down at the workspace.

Both cameras share the focal length and principal point and are displaced
along the image x axis by the baseline, so depth comes straight from the
horizontal disparity.  A synthetic detection model stands in for marker
segmentation: the wrist occludes the marker with a pitch-dependent
probability, and visible detections carry sub-pixel Gaussian noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .worldsim import DEFAULT_WORKSPACE, PITCH_RANGE, Orientation, WorldPoint, Workspace

DEFAULT_PIXEL_NOISE_PX = 0.5

# Fraction of detections that survive the both-cameras-see-it requirement
# under the default wrist-occlusion strength.
DEFAULT_JOINT_VISIBILITY = 0.369


@dataclass(frozen=True)
class CameraPosition:
    """Tool position in the left-camera frame, mm: x along the baseline,
    y along image rows, z depth (positive in front of the rig)."""

    c_x: float
    c_y: float
    c_z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.c_x, self.c_y, self.c_z)):
            raise ValueError("camera position components must be finite")
        if not self.c_z > 0:
            raise ValueError(f"camera-frame depth must be positive, got {self.c_z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.c_x, self.c_y, self.c_z])

    @classmethod
    def from_array(cls, a) -> "CameraPosition":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class PixelPair:
    """Matched left/right pixels of one world point, (u, v) each."""

    left: tuple[float, float]
    right: tuple[float, float]

    @property
    def disparity(self) -> float:
        return self.left[0] - self.right[0]


@dataclass(frozen=True)
class Detection:
    """Per-camera marker observation; invisibility is a value, not an error."""

    left_px: tuple[float, float] | None
    right_px: tuple[float, float] | None
    left_visible: bool
    right_visible: bool

    @property
    def both_visible(self) -> bool:
        return self.left_visible and self.right_visible

    def pixel_pair(self) -> PixelPair:
        if not self.both_visible:
            raise ValueError("marker was not seen by both cameras")
        return PixelPair(self.left_px, self.right_px)


@dataclass(frozen=True)
class StereoRig:
    """Downward-looking rectified pair centred above (center_x, center_y)."""

    focal_px: float = 2152.65
    baseline_mm: float = 5.0
    principal: tuple[float, float] = (960.0, 540.0)
    image_size: tuple[int, int] = (1920, 1080)
    height_mm: float = DEFAULT_WORKSPACE.camera_height
    center_x: float = 37.5
    center_y: float = 37.5

    def __post_init__(self):
        if not (self.focal_px > 0 and self.baseline_mm > 0 and self.height_mm > 0):
            raise ValueError("focal length, baseline and rig height must be positive")

    @property
    def left_cam_x(self) -> float:
        return self.center_x - 0.5 * self.baseline_mm

    @property
    def right_cam_x(self) -> float:
        return self.center_x + 0.5 * self.baseline_mm

    @property
    def px_per_mm(self) -> float:
        """Lateral image scale at the workspace floor plane."""
        return self.focal_px / self.height_mm

    @classmethod
    def above(cls, ws: Workspace, **kwargs) -> "StereoRig":
        """Rig centred over the workspace at its camera height; checks that
        every workspace corner lands inside both images."""
        cx, cy = ws.center_xy
        rig = cls(height_mm=ws.camera_height, center_x=cx, center_y=cy, **kwargs)
        for x in ws.x_range:
            for y in ws.y_range:
                for z in ws.z_range:
                    pp = project(WorldPoint(x, y, z), rig)
                    for u, v in (pp.left, pp.right):
                        if not (0 <= u <= rig.image_size[0] and 0 <= v <= rig.image_size[1]):
                            raise ValueError(f"workspace corner ({x},{y},{z}) projects "
                                             f"outside the image at ({u:.1f},{v:.1f})")
        return rig

    def camera_from_world(self, w: WorldPoint) -> CameraPosition:
        """Left-camera coordinates of a world point (exact geometry)."""
        p = w.as_array() if isinstance(w, WorldPoint) else np.asarray(w, dtype=float)
        depth = self.height_mm - p[2]
        return CameraPosition(p[0] - self.left_cam_x, self.center_y - p[1], depth)

    def world_from_camera(self, c: CameraPosition) -> WorldPoint:
        a = c.as_array() if isinstance(c, CameraPosition) else np.asarray(c, dtype=float)
        return WorldPoint(a[0] + self.left_cam_x, self.center_y - a[1], self.height_mm - a[2])


DEFAULT_RIG = StereoRig()


def project(w: WorldPoint, rig: StereoRig = DEFAULT_RIG) -> PixelPair:
    """Perspective projection into both cameras; rejects points behind the rig."""
    p = w.as_array() if isinstance(w, WorldPoint) else np.asarray(w, dtype=float)
    depth = rig.height_mm - p[2]
    if depth <= 0:
        raise ValueError(f"point at z={p[2]} is not in front of the cameras")
    pu, pv = rig.principal
    v = float(pv + rig.focal_px * (rig.center_y - p[1]) / depth)
    u_left = float(pu + rig.focal_px * (p[0] - rig.left_cam_x) / depth)
    u_right = float(pu + rig.focal_px * (p[0] - rig.right_cam_x) / depth)
    return PixelPair((u_left, v), (u_right, v))


def triangulate(pair: PixelPair, rig: StereoRig = DEFAULT_RIG) -> CameraPosition:
    """Invert the projection from a matched pixel pair via disparity.

    Works on noisy pairs too: row coordinates are averaged across cameras.
    """
    d = pair.disparity
    if d <= 0:
        raise ValueError(f"disparity must be positive, got {d}")
    pu, pv = rig.principal
    depth = rig.focal_px * rig.baseline_mm / d
    v_mean = 0.5 * (pair.left[1] + pair.right[1])
    return CameraPosition((pair.left[0] - pu) * depth / rig.focal_px,
                          (v_mean - pv) * depth / rig.focal_px,
                          depth)


def lateral_positions(pair: PixelPair, rig: StereoRig = DEFAULT_RIG) -> tuple[np.ndarray, np.ndarray]:
    """Left-frame (x, y) implied independently by each camera at the pair's
    disparity depth; disagreement flags a mismatched detection."""
    d = pair.disparity
    if d <= 0:
        raise ValueError(f"disparity must be positive, got {d}")
    pu, pv = rig.principal
    depth = rig.focal_px * rig.baseline_mm / d
    from_left = np.array([(pair.left[0] - pu) * depth / rig.focal_px,
                          (pair.left[1] - pv) * depth / rig.focal_px])
    from_right = np.array([(pair.right[0] - pu) * depth / rig.focal_px + rig.baseline_mm,
                           (pair.right[1] - pv) * depth / rig.focal_px])
    return from_left, from_right


# ---------------------------------------------------------------------------
# Synthetic marker detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OcclusionModel:
    """Wrist occlusion: each camera sees the marker with probability that
    falls off logistically as pitch leaves its nominal value."""

    pitch_nominal: float = 5.0
    softness: float = 3.0
    halfwidth: float = 7.0
    pixel_noise_px: float = DEFAULT_PIXEL_NOISE_PX

    def visibility(self, pitch_deg: float) -> float:
        z = (abs(pitch_deg - self.pitch_nominal) - self.halfwidth) / self.softness
        if z >= 0:
            e = math.exp(-z)
            return float(e / (1.0 + e))
        return float(1.0 / (1.0 + math.exp(z)))

    def joint_visibility(self, pitch_range: tuple[float, float] = PITCH_RANGE,
                         n: int = 2001) -> float:
        """Mean probability that both (independent) cameras see the marker,
        pitch uniform over the collection range."""
        pitches = np.linspace(pitch_range[0], pitch_range[1], n)
        z = (np.abs(pitches - self.pitch_nominal) - self.halfwidth) / self.softness
        p = 1.0 / (1.0 + np.exp(z))
        return float(np.mean(p * p))


def calibrate_occlusion(joint_visibility: float = DEFAULT_JOINT_VISIBILITY,
                        pitch_nominal: float = 5.0, softness: float = 3.0,
                        pixel_noise_px: float = DEFAULT_PIXEL_NOISE_PX,
                        pitch_range: tuple[float, float] = PITCH_RANGE) -> OcclusionModel:
    """Solve for the logistic halfwidth that yields the requested retention."""
    if not 0 < joint_visibility < 1:
        raise ValueError("joint_visibility must be in (0, 1)")
    span = max(abs(pitch_range[0] - pitch_nominal), abs(pitch_range[1] - pitch_nominal))
    lo, hi = -10.0 * softness, span + 10.0 * softness
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        m = OcclusionModel(pitch_nominal, softness, mid, pixel_noise_px)
        if m.joint_visibility(pitch_range) < joint_visibility:
            lo = mid
        else:
            hi = mid
    return OcclusionModel(pitch_nominal, softness, 0.5 * (lo + hi), pixel_noise_px)


DEFAULT_OCCLUSION = calibrate_occlusion()


def detect_marker(w: WorldPoint, phi: Orientation, rig: StereoRig = DEFAULT_RIG,
                  seed=0, occ: OcclusionModel = DEFAULT_OCCLUSION) -> Detection:
    """Observe the tool marker: each camera independently sees it with the
    occlusion model's probability, and visible pixels get Gaussian noise."""
    rng = np.random.default_rng(seed)
    p_vis = occ.visibility(phi.phi_p)
    left_visible = bool(rng.random() < p_vis)
    right_visible = bool(rng.random() < p_vis)
    p = w.as_array() if isinstance(w, WorldPoint) else np.asarray(w, dtype=float)
    if rig.height_mm - p[2] <= 0:
        return Detection(None, None, False, False)
    pp = project(w, rig)
    left_px = right_px = None
    if left_visible:
        n = rng.normal(0.0, occ.pixel_noise_px, 2) if occ.pixel_noise_px > 0 else np.zeros(2)
        left_px = (pp.left[0] + n[0], pp.left[1] + n[1])
    if right_visible:
        n = rng.normal(0.0, occ.pixel_noise_px, 2) if occ.pixel_noise_px > 0 else np.zeros(2)
        right_px = (pp.right[0] + n[0], pp.right[1] + n[1])
    return Detection(left_px, right_px, left_visible, right_visible)
