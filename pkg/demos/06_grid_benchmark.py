"""Benchmark the three calibrations on the circle grid, pixel-error metric.

The pixel distance is measured in the left image only, so a vertical miss is
nearly invisible, exactly as a single overhead photograph would judge it.
With the default scenario (1000 training epochs) the three mappings land
around 4.5 / 2 / 0.8 mm; the reduced epochs here inflate the middle column a
little but preserve the ladder.

Run:  python demos/06_grid_benchmark.py   (about two minutes)
"""
from calibench.evalbench import fit_per_yaw_rigid, format_bench_table, full_table
from calibench.phase1 import clean, collect
from calibench.phase2 import (CombinedPredictor, collect_fine, make_grid,
                              train_residual_forests)
from calibench.regress import MlpArch, train_mlp
from calibench.stereocam import DEFAULT_RIG
from calibench.worldsim import make_bias_field

field = make_bias_field(seed=0, target_rms=4.55)
rig = DEFAULT_RIG

raw = collect(57, field, rig, seed=0)
ds = clean(raw, rig, seed=0)
print(f"training the coarse model on {len(ds)} samples (reduced epochs)...")
mlp = train_mlp(ds, MlpArch(3, 300, "relu"), epochs=300, seed=1)

grid = make_grid()
fine = collect_fine(mlp, grid, field, rig, seed=2)
combined = CombinedPredictor(mlp, train_residual_forests(fine, seed=3))
rigid = fit_per_yaw_rigid(ds)

table = full_table({"RBT": rigid, "DNN": mlp, "DNN+RF": combined},
                   grid, field, rig, seed=4)
print()
print(format_bench_table(table))
