"""Cross-validated model zoo on the coarse data: linear baselines (Euler vs
quaternion inputs), regression forests of several depths, and a few
perceptron architectures.

The full architecture sweep (24 configurations, 10-fold, long training) runs
through `calibench train` with sweep=1 in the config; the reduced budget here
shows the shape of the comparison in about a minute.

Run:  python demos/04_model_comparison.py
"""
import numpy as np

from calibench.phase1 import clean, collect
from calibench.regress import (MlpArch, forest_trainer, kfold_cv, linear_trainer,
                               mlp_trainer)
from calibench.stereocam import DEFAULT_RIG
from calibench.worldsim import make_bias_field

field = make_bias_field(seed=0, target_rms=4.55)
raw = collect(57, field, DEFAULT_RIG, seed=0)
ds = clean(raw, DEFAULT_RIG, seed=0)
idx = np.random.default_rng(0).permutation(len(ds))[:500]
data = (ds.inputs[idx], ds.targets[idx])
print(f"evaluating on {len(idx)} of {len(ds)} cleaned samples, 5-fold CV\n")

candidates = [
    ("linear (euler)", linear_trainer("euler")),
    ("linear (quaternion)", linear_trainer("quaternion")),
    ("forest t10_dN", forest_trainer(n_trees=10)),
    ("forest t100_d10", forest_trainer(n_trees=100, max_depth=10)),
    ("mlp u30_h1_relu", mlp_trainer(MlpArch(1, 30, "relu"), epochs=150)),
    ("mlp u300_h1_sigmoid", mlp_trainer(MlpArch(1, 300, "sigmoid"), epochs=150)),
    ("mlp u300_h3_relu", mlp_trainer(MlpArch(3, 300, "relu"), epochs=150)),
]

results = []
for name, trainer in candidates:
    report = kfold_cv(data, 5, trainer, seed=0)
    results.append((report.mean, report.std, name))
    print(f"  {name:<22} {report.mean:7.2f} +/- {report.std:.2f} mm^2")

best = min(results)
print(f"\nbest of this round: {best[2]} at {best[0]:.2f} mm^2")
print("(losses include an irreducible floor from stereo depth noise)")
