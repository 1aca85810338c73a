"""Bandit-accelerated k-medoids, forest node splitting, and inner-product search."""

from banditkit.bandit import (
    ArmStats,
    BudgetExceeded,
    EliminationConfig,
    SampleCounter,
    SearchOutcome,
    adaptive_search,
    estimate_sigma,
    hoeffding_ci,
    successive_elimination,
)

__all__ = [
    "ArmStats",
    "BudgetExceeded",
    "EliminationConfig",
    "SampleCounter",
    "SearchOutcome",
    "adaptive_search",
    "estimate_sigma",
    "hoeffding_ci",
    "successive_elimination",
]

__version__ = "0.1.0"
