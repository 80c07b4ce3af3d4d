"""Fragment-removal trials: the coarse model alone versus the combined one.

Each trial scatters eight fragments; a grasp snaps the fragment angle to the
nearest yaw set point, drives the tool through the biased world, and the
outcome is judged blind from the landing error alone:
    -  pulled out cleanly          A  missed (calibration error)
    B  slipped despite a good grip C  one-tip snag in the marginal band

Run:  python demos/07_fragment_trials.py   (about two minutes)
"""
from calibench.debridesim import format_trials_table, gen_scene, run_trials, snap_yaw
from calibench.phase1 import clean, collect
from calibench.phase2 import (CombinedPredictor, collect_fine, make_grid,
                              train_residual_forests)
from calibench.regress import MlpArch, train_mlp
from calibench.stereocam import DEFAULT_RIG
from calibench.worldsim import make_bias_field

field = make_bias_field(seed=0, target_rms=4.55)
rig = DEFAULT_RIG

scene = gen_scene("pumpkin", seed=0)
print("a scene of eight pumpkin seeds (centre, minor width, angle -> yaw):")
for f in scene.fragments:
    print(f"  ({f.center[0]:5.1f}, {f.center[1]:5.1f})  {f.width:4.2f} mm  "
          f"{f.angle_deg:+7.2f} deg -> {snap_yaw(f.angle_deg):+3.0f}")

raw = collect(57, field, rig, seed=0)
ds = clean(raw, rig, seed=0)
print(f"\ntraining the coarse model on {len(ds)} samples (reduced epochs)...")
mlp = train_mlp(ds, MlpArch(3, 300, "relu"), epochs=300, seed=1)
fine = collect_fine(mlp, make_grid(), field, rig, seed=2)
combined = CombinedPredictor(mlp, train_residual_forests(fine, seed=3))

for kind in ("pumpkin", "raisin"):
    a = run_trials(kind, mlp, 15, seed=10, field=field, rig=rig)
    b = run_trials(kind, combined, 15, seed=10, field=field, rig=rig)
    print(f"\n=== {kind} ===")
    print(format_trials_table(a, b))
