"""Coarse data collection: corner sweeps, pauses with extra rotations, cleaning.

Run:  python demos/03_coarse_collection.py
"""
import numpy as np

from calibench.persist import save_coarse
from calibench.phase1 import clean, collect, gen_trajectory
from calibench.stereocam import DEFAULT_RIG
from calibench.worldsim import make_bias_field

field = make_bias_field(seed=0, target_rms=4.55)
rig = DEFAULT_RIG

# One trajectory: a corner start, ~1 mm pauses, three extra rotations each.
wps = gen_trajectory(seed=1)
print(f"trajectory 1: {len(wps)} waypoints ({len(wps) // 4} pauses)")
for pos, phi in wps[:4]:
    print(f"  at ({pos.b_x:5.2f}, {pos.b_y:5.2f}, {pos.b_z:4.2f})  "
          f"yaw {phi.phi_y:+7.2f}  pitch {phi.phi_p:+6.2f}  roll {phi.phi_r:+8.2f}")

# The full collection and its cleaning pass.
raw = collect(57, field, rig, seed=0)
ds = clean(raw, rig, seed=0)
print(f"\ncollected {len(raw)} raw records from 57 trajectories")
print(f"kept {len(ds)} after requiring both cameras to agree "
      f"(retention {ds.retention:.3f})")

# Inputs are triangulated camera poses; targets are the commanded positions.
print("\nfirst rows (c_x, c_y, c_z, yaw, pitch, roll -> b_x, b_y, b_z):")
for row, tgt in zip(ds.inputs[:3], ds.targets[:3]):
    print("  " + " ".join(f"{v:8.2f}" for v in row) + "  ->  "
          + " ".join(f"{v:6.2f}" for v in tgt))

save_coarse(ds, "/tmp/coarse_demo.csv")
print("\nwrote /tmp/coarse_demo.csv (+ .meta sidecar with provenance)")
