"""Fine calibration pass: grid touch-ups become per-yaw residual forests.

Run:  python demos/05_fine_residuals.py   (about two minutes)
"""
import numpy as np

from calibench.phase1 import clean, collect
from calibench.phase2 import (CombinedPredictor, collect_fine, make_grid,
                              train_residual_forests)
from calibench.regress import MlpArch, train_mlp
from calibench.stereocam import DEFAULT_RIG
from calibench.worldsim import YAW_TAGS, make_bias_field

field = make_bias_field(seed=0, target_rms=4.55)
rig = DEFAULT_RIG

raw = collect(57, field, rig, seed=0)
ds = clean(raw, rig, seed=0)
print(f"coarse model on {len(ds)} samples (reduced epochs for the demo)...")
mlp = train_mlp(ds, MlpArch(3, 300, "relu"), epochs=300, seed=1)

grid = make_grid()
fine = collect_fine(mlp, grid, field, rig, seed=2)
print(f"\ncorrections recorded at {len(grid)} circles x {len(YAW_TAGS)} yaw set points:")
for yaw in YAW_TAGS:
    norms = np.linalg.norm(fine[yaw].corrections, axis=1)
    print(f"  yaw {yaw:+5.0f}: mean |correction| {norms.mean():.2f} mm "
          f"(max {norms.max():.2f})")

forests = train_residual_forests(fine, seed=3)
combined = CombinedPredictor(mlp, forests)

# Re-measure the grid with the correction applied: the remaining gap shrinks.
fine_after = collect_fine(combined, grid, field, rig, seed=4)
before = np.concatenate([np.linalg.norm(fine[y].corrections, axis=1) for y in YAW_TAGS])
after = np.concatenate([np.linalg.norm(fine_after[y].corrections, axis=1)
                        for y in YAW_TAGS])
print(f"\nmean |correction| before the forests: {before.mean():.2f} mm")
print(f"mean |correction| after the forests:  {after.mean():.2f} mm")
