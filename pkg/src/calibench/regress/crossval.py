"""K-fold cross validation and the dense architecture sweep."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from .._seeds import as_seed_sequence
from .forest import fit_forest
from .linear import fit_linear
from .mlp import MlpArch, squared_l2, train_mlp

# Trainer protocol: trainer(X_train, Y_train, seed) -> predict(X) callable.
Trainer = Callable[[np.ndarray, np.ndarray, object], Callable[[np.ndarray], np.ndarray]]

SWEEP_DEPTHS = (1, 2, 3, 4)
SWEEP_WIDTHS = (30, 300)
SWEEP_ACTIVATIONS = ("relu", "sigmoid", "tanh")


@dataclass(frozen=True)
class CvReport:
    """Per-fold mean squared L2 losses, mm^2."""

    fold_losses: np.ndarray
    k: int

    def __post_init__(self):
        if len(self.fold_losses) != self.k:
            raise ValueError("need one loss per fold")

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_losses))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_losses))


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(data, "inputs") and hasattr(data, "targets"):
        return np.asarray(data.inputs, float), np.asarray(data.targets, float)
    X, Y = data
    return np.asarray(X, float), np.asarray(Y, float)


def fold_indices(n: int, k: int, seed=0) -> list[np.ndarray]:
    """Seeded partition of range(n) into k near-equal folds."""
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


def kfold_cv(data, k: int, trainer: Trainer, *, seed=0,
             n_workers: int | None = None) -> CvReport:
    """Average held-out squared L2 loss over a seeded k-fold partition.

    Fold seeds are spawned up front, so running folds in parallel gives the
    same report as the serial loop.
    """
    X, Y = _as_xy(data)
    n = len(X)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    folds = fold_indices(n, k, seed)
    fold_seeds = as_seed_sequence(seed).spawn(k)

    def run_fold(i: int) -> float:
        held = folds[i]
        train_idx = np.concatenate([folds[j] for j in range(k) if j != i])
        predict = trainer(X[train_idx], Y[train_idx], fold_seeds[i])
        return squared_l2(predict(X[held]), Y[held])

    if n_workers and n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            losses = list(pool.map(run_fold, range(k)))
    else:
        losses = [run_fold(i) for i in range(k)]
    return CvReport(np.asarray(losses, dtype=float), k)


# ---------------------------------------------------------------------------
# Trainer factories
# ---------------------------------------------------------------------------

def mlp_trainer(arch: MlpArch | tuple, epochs: int, **train_kw) -> Trainer:
    def trainer(X, Y, seed):
        model = train_mlp((X, Y), arch, epochs, seed, **train_kw)
        return model.predict
    return trainer


def linear_trainer(angle_repr: str = "euler") -> Trainer:
    def trainer(X, Y, seed):
        model = fit_linear((X, Y), angle_repr)
        return model.predict
    return trainer


def forest_trainer(n_trees: int = 100, max_depth: int | None = None, **kw) -> Trainer:
    def trainer(X, Y, seed):
        model = fit_forest(X, Y, n_trees, max_depth, seed=seed, **kw)
        return model.predict
    return trainer


# ---------------------------------------------------------------------------
# Architecture sweep
# ---------------------------------------------------------------------------

def hyperparam_sweep(data, *, epochs: int = 300, k: int = 10, seed=0,
                     n_workers: int | None = None,
                     **train_kw) -> list[tuple[MlpArch, CvReport]]:
    """Cross-validate every (depth, width, activation) combination.

    Returns all 24 configurations sorted by ascending mean CV loss; ties
    break on the label so the ranking is reproducible.
    """
    results = []
    for depth, width, act in product(SWEEP_DEPTHS, SWEEP_WIDTHS, SWEEP_ACTIVATIONS):
        arch = MlpArch(depth, width, act)
        report = kfold_cv(data, k, mlp_trainer(arch, epochs, **train_kw),
                          seed=seed, n_workers=n_workers)
        results.append((arch, report))
    return sorted(results, key=lambda r: (r[1].mean, r[0].label))


def format_sweep_table(results: list[tuple[MlpArch, CvReport]], top: int = 12) -> str:
    """Aligned mean +/- std table of the best configurations."""
    lines = [f"{'config':<18}{'cv loss (mm^2)':>18}"]
    for arch, report in results[:top]:
        lines.append(f"{arch.label:<18}{report.mean:>10.3f} +/- {report.std:.3f}")
    return "\n".join(lines)


def sweep_csv_lines(results: list[tuple[MlpArch, CvReport]]) -> list[str]:
    lines = ["config,hidden_layers,width,activation,cv_mean_mm2,cv_std_mm2"]
    for arch, report in results:
        lines.append(f"{arch.label},{arch.hidden_layers},{arch.width},"
                     f"{arch.activation},{report.mean:.17g},{report.std:.17g}")
    return lines
