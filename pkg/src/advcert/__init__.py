"""Adversarial-risk certificates for linear and feed-forward predictors."""

from .core import (
    BinaryLabels,
    ClassLabels,
    Dataset,
    LossSpec,
    PerturbationBall,
    RealLabels,
    dual_exponent,
    load_dataset,
    loss_eval,
    save_dataset,
)
from .linear import (
    BoundReport,
    CapacityLinear,
    LinearModel,
    MulticlassLinearModel,
    certify_linear,
    certify_linear_regression,
    certify_multiclass_linear,
    sup_transform_linear,
    train_convex,
    train_regularized_grid,
)
from .network import (
    Architecture,
    CapacityNet,
    NeuralNet,
    certify_multiclass_nn,
    certify_nn,
    certify_nn_regression,
    forward,
    restricted_tree_eval,
    train_tree,
    tree_transform_eval,
)

__version__ = "0.1.0"
