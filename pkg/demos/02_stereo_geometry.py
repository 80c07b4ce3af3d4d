"""The overhead stereo pair: projection, triangulation and marker detection.

Run:  python demos/02_stereo_geometry.py
"""
import numpy as np

from calibench.stereocam import (DEFAULT_OCCLUSION, DEFAULT_RIG, detect_marker, project,
                                 triangulate)
from calibench.worldsim import Orientation, WorldPoint

rig = DEFAULT_RIG
print(f"rig: focal {rig.focal_px} px, baseline {rig.baseline_mm} mm, "
      f"height {rig.height_mm} mm")
print(f"lateral scale at the floor plane: {rig.px_per_mm:.2f} px/mm")

# A point on the left optical axis projects to the principal point.
w = WorldPoint(rig.left_cam_x, rig.center_y, 0.0)
pp = project(w, rig)
print(f"\non-axis point -> left pixel {pp.left}, disparity {pp.disparity:.2f} px")

# Triangulation inverts projection to floating point accuracy.
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(1000):
    w = WorldPoint(*rng.uniform((0, 0, 0), (75, 75, 10)))
    back = rig.world_from_camera(triangulate(project(w, rig), rig))
    worst = max(worst, float(np.linalg.norm(back.as_array() - w.as_array())))
print(f"project->triangulate round trip, worst of 1000: {worst:.2e} mm")

# Sub-pixel noise translates to tens of microns laterally but millimetres in
# depth: depth rides on the small disparity difference.
clean = project(WorldPoint(37.5, 37.5, 0.0), rig)
lat, dep = [], []
for _ in range(4000):
    n = rng.normal(0, 0.5, 4)
    noisy = type(clean)((clean.left[0] + n[0], clean.left[1] + n[1]),
                        (clean.right[0] + n[2], clean.right[1] + n[3]))
    cam = triangulate(noisy, rig).as_array()
    lat.append(cam[0])
    dep.append(cam[2])
print(f"0.5 px noise -> lateral std {np.std(lat):.3f} mm, depth std {np.std(dep):.2f} mm")

# The wrist occludes the marker more as pitch leaves its nominal value; both
# cameras must see it for a sample to survive.
print(f"\nvisibility vs pitch: "
      + ", ".join(f"{p:+.0f} deg: {DEFAULT_OCCLUSION.visibility(p):.2f}"
                  for p in (5.0, 12.0, 18.0, 25.0)))
hits = 0
n = 5000
w = WorldPoint(37.5, 37.5, 0.0)
for i in range(n):
    phi = Orientation(rng.uniform(-90, 90), rng.uniform(-15, 25),
                      rng.uniform(-180, -150))
    hits += detect_marker(w, phi, rig, seed=i).both_visible
print(f"both cameras see the marker in {hits / n:.3f} of random poses "
      f"(calibrated for {DEFAULT_OCCLUSION.joint_visibility():.3f})")
