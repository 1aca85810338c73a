"""Histogram-based trees and forests with exact or bandit node splitting."""

from banditkit.forest.impurity import (
    classification_objective,
    impurity,
    regression_objective,
    split_ci,
    split_objective,
)
from banditkit.forest.split import NO_SPLIT, SplitResult, mabsplit, split_exact
from banditkit.forest.trees import (
    Forest,
    ForestConfig,
    fit_forest,
    predict,
    predict_proba,
)
from banditkit.forest.stability import (
    feature_stability,
    mdi_importance,
    oob_permutation_importance,
)

__all__ = [
    "Forest",
    "ForestConfig",
    "NO_SPLIT",
    "SplitResult",
    "classification_objective",
    "feature_stability",
    "fit_forest",
    "impurity",
    "mabsplit",
    "mdi_importance",
    "oob_permutation_importance",
    "predict",
    "predict_proba",
    "regression_objective",
    "split_ci",
    "split_exact",
    "split_objective",
]
