"""The simulated world: a workspace box and a hidden, repeatable command bias.

Run:  python demos/01_bias_field_world.py
"""
import numpy as np

from calibench.persist import save_bias_field
from calibench.worldsim import (BasePosition, Orientation, DEFAULT_WORKSPACE, contains,
                                execute_command, grid_rms, make_bias_field)

ws = DEFAULT_WORKSPACE
print(f"workspace: {ws.x_range} x {ws.y_range} x {ws.z_range} mm, "
      f"camera {ws.camera_height} mm above the floor")

# The field is seeded and rescaled so its reference-grid RMS is exact.
field = make_bias_field(seed=7, target_rms=4.55)
print(f"\nbias field seed=7: grid RMS = {grid_rms(field):.4f} mm (target 4.55)")

# Same command, same bias, every time: the error is systematic.
pose = Orientation(45.0, 5.0, -165.0)
for p in ([10, 10, 0], [37.5, 37.5, 5], [70, 20, 2]):
    b = field(np.array(p, float), pose)
    print(f"  bias at {p}: ({b[0]:+.2f}, {b[1]:+.2f}, {b[2]:+.2f}) mm")

# Executing a command lands at offset + bias + measurement noise.
cmd = BasePosition(30.0, 40.0, 2.0)
reached = execute_command(cmd, pose, field, noise_seed=0)
err = reached.as_array() - cmd.as_array()
print(f"\ncommand {cmd.as_array()} -> reached {np.round(reached.as_array(), 3)}"
      f"  (miss {np.linalg.norm(err):.2f} mm)")

# The bias is smooth: nearby commands err in nearly the same direction.
rng = np.random.default_rng(0)
pts = rng.uniform(ws.lo, ws.hi, (2000, 3))
step = rng.normal(size=(2000, 3))
step *= 0.5 / np.linalg.norm(step, axis=1, keepdims=True)
ang = np.tile(pose.as_array(), (2000, 1))
slopes = np.linalg.norm(field.evaluate(pts + step, ang) - field.evaluate(pts, ang),
                        axis=1) / 0.5
print(f"local slope over 0.5 mm probes: mean {slopes.mean():.2f}, "
      f"max {slopes.max():.2f} mm/mm")

# Safety envelope: commands may overshoot the box by the headroom only.
print(f"\ncontains  (76, 0, 0): {contains(BasePosition(76, 0, 0))}")
try:
    execute_command(BasePosition(-11, 0, 0), pose, field, 0)
except ValueError as exc:
    print(f"execute (-11, 0, 0): rejected ({exc})")

save_bias_field(field, "/tmp/bias_field_demo.txt")
print("\nserialized the field to /tmp/bias_field_demo.txt (line-oriented key=value)")
