"""Maximum inner product search: exact oracle, adaptive solvers, and matching pursuit."""

from banditkit.mips.core import (
    MipsAnswer,
    MipsInstance,
    banditmips,
    banditmips_alpha,
    bucket_ae,
    naive_mips,
    topk_mips,
    warm_start_batch,
)
from banditkit.mips.pursuit import matching_pursuit
from banditkit.mips.weights import (
    CoordinateWeights,
    combined_estimator_variance,
    optimal_weights,
    weighted_estimate,
)

__all__ = [
    "CoordinateWeights",
    "MipsAnswer",
    "MipsInstance",
    "banditmips",
    "banditmips_alpha",
    "bucket_ae",
    "combined_estimator_variance",
    "matching_pursuit",
    "naive_mips",
    "optimal_weights",
    "topk_mips",
    "warm_start_batch",
    "weighted_estimate",
]
