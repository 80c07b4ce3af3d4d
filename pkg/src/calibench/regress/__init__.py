"""Predictor families and the evaluation harness: rigid alignment, linear
baselines, the Adam-trained perceptron, bagged regression trees, k-fold
cross-validation, and the architecture sweep."""

from .crossval import (CvReport, fold_indices, forest_trainer, format_sweep_table,
                       hyperparam_sweep, kfold_cv, linear_trainer, mlp_trainer,
                       sweep_csv_lines, SWEEP_ACTIVATIONS, SWEEP_DEPTHS, SWEEP_WIDTHS)
from .forest import ForestModel, Tree, fit_forest
from .linear import (ANGLE_REPRS, LinearModel, euler_to_quaternion, fit_linear,
                     matrix_to_quaternion, quaternion_to_matrix)
from .mlp import (ACTIVATIONS, MlpArch, MlpModel, mlp_gradient, squared_l2, train_mlp)
from .rigid import RigidTransform, fit_rigid, rigid_loss

__all__ = [
    "ACTIVATIONS", "ANGLE_REPRS", "CvReport", "ForestModel", "LinearModel",
    "MlpArch", "MlpModel", "RigidTransform", "SWEEP_ACTIVATIONS", "SWEEP_DEPTHS",
    "SWEEP_WIDTHS", "Tree", "euler_to_quaternion", "fit_forest", "fit_linear",
    "fit_rigid", "fold_indices", "forest_trainer", "format_sweep_table",
    "hyperparam_sweep", "kfold_cv", "linear_trainer", "matrix_to_quaternion",
    "mlp_gradient", "mlp_trainer", "quaternion_to_matrix", "rigid_loss",
    "squared_l2", "sweep_csv_lines", "train_mlp",
]
