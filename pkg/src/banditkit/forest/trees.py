"""Histogram-based tree ensembles with pluggable node-split solvers.

Three variants share one trainer:

* ``rf`` — per-tree bootstrap rows, sqrt(M) candidate features per node,
  equal-width bin edges.
* ``extra_trees`` — full rows, uniform-random bin edges per node; sqrt(M)
  candidate features for classification, all features for regression.
* ``random_patches`` — one fixed (alpha_n * N rows, alpha_f * M features)
  subsample drawn per forest; every tree trains on that patch.

Trees are stored as JSON-native nested dicts. Internal nodes keep the
statistics needed for impurity-based feature importance; routing sends values
strictly below the threshold to the left child, matching the histogram
solvers' bin arithmetic.

Trees derive independent seeds from one root seed, so training is
deterministic no matter how the per-tree work would be scheduled. A shared
insertion budget is enforced by the histogram counter itself: the tree whose
next batch would cross the cap aborts, training stops, and only fully grown
trees count as completed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from banditkit.bandit import BudgetExceeded, SampleCounter
from banditkit.forest.histogram import uniform_random_edges
from banditkit.forest.impurity import CLASSIFICATION_METRICS, impurity
from banditkit.forest.split import NO_SPLIT, mabsplit, split_exact

VARIANTS = ("rf", "extra_trees", "random_patches")
SPLITTERS = ("exact", "mabsplit")

DEFAULT_MIN_IMPURITY_DECREASE = 0.005
DEFAULT_N_BINS = 10
DEFAULT_BATCH_SIZE = 1000


@dataclass(frozen=True)
class ForestConfig:
    variant: str = "rf"
    n_trees: int = 10
    max_depth: int | None = None
    max_leaf_nodes: int | None = None
    min_impurity_decrease: float = DEFAULT_MIN_IMPURITY_DECREASE
    n_bins: int = DEFAULT_N_BINS
    metric: str = "gini"
    alpha_n: float = 0.7
    alpha_f: float = 0.85
    splitter: str = "exact"
    delta: float = 0.01
    batch_size: int = DEFAULT_BATCH_SIZE
    budget: int | None = None
    ci_policy: str = "flat"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.splitter not in SPLITTERS:
            raise ValueError(f"splitter must be one of {SPLITTERS}, got {self.splitter!r}")
        if self.metric not in CLASSIFICATION_METRICS + ("mse",):
            raise ValueError(f"unknown impurity metric {self.metric!r}")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.n_bins < 2:
            raise ValueError("need at least 2 bins to have an interior threshold")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.max_leaf_nodes is not None and self.max_leaf_nodes < 1:
            raise ValueError("max_leaf_nodes must be >= 1")
        if not (0.0 < self.alpha_n <= 1.0 and 0.0 < self.alpha_f <= 1.0):
            raise ValueError("alpha_n and alpha_f must lie in (0, 1]")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be >= 0 when present")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def task(self) -> str:
        return "classification" if self.metric in CLASSIFICATION_METRICS else "regression"


@dataclass
class Forest:
    config: ForestConfig
    task: str
    n_features: int
    n_classes: int | None
    trees: list[dict]
    oob_rows: list[np.ndarray | None]
    n_insertions: int
    n_trees_completed: int
    budget_exhausted: bool = False

    def report(self, X=None, y=None) -> dict[str, Any]:
        """Training-report payload; pass evaluation data to fill the score."""
        score = None
        if X is not None and y is not None and self.trees:
            if self.task == "classification":
                score = float(np.mean(predict(self, X) == np.asarray(y)))
            else:
                err = predict(self, X) - np.asarray(y, dtype=float)
                score = float(np.mean(err * err))
        return {
            "variant": self.config.variant,
            "splitter": self.config.splitter,
            "n_insertions": int(self.n_insertions),
            "accuracy_or_mse": score,
            "n_trees_completed": int(self.n_trees_completed),
        }

    def to_json(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "variant": self.config.variant,
            "splitter": self.config.splitter,
            "n_features": int(self.n_features),
            "n_classes": None if self.n_classes is None else int(self.n_classes),
            "n_insertions": int(self.n_insertions),
            "n_trees_completed": int(self.n_trees_completed),
            "trees": self.trees,
        }


# ----- growing ------------------------------------------------------------------


def _n_candidates(cfg: ForestConfig, m_avail: int) -> int:
    if cfg.variant == "extra_trees" and cfg.task == "regression":
        return m_avail
    return max(1, int(math.sqrt(m_avail)))


def _leaf(y_node, n_classes):
    if n_classes is not None:
        counts = np.bincount(y_node, minlength=n_classes)
        return {"leaf": True, "n": int(y_node.size), "counts": counts.tolist()}
    return {"leaf": True, "n": int(y_node.size), "mean": float(np.mean(y_node))}


def _node_summary(y_node, n_classes):
    if n_classes is not None:
        return np.bincount(y_node, minlength=n_classes)
    y_node = np.asarray(y_node, dtype=float)
    return (y_node.size, float(y_node.sum()), float(np.square(y_node).sum()))


def _grow(X, y, rows, depth, cfg, feature_pool, rng, counter, n_classes, state):
    y_node = y[rows]
    node_impurity = impurity(cfg.metric, _node_summary(y_node, n_classes))
    if (
        rows.size < 2
        or node_impurity <= 0.0
        or (cfg.max_depth is not None and depth >= cfg.max_depth)
        or (cfg.max_leaf_nodes is not None and state["leaves"] + 1 > cfg.max_leaf_nodes)
    ):
        return _leaf(y_node, n_classes)

    k = _n_candidates(cfg, feature_pool.size)
    candidates = np.sort(rng.choice(feature_pool, size=k, replace=False))
    X_node = X[rows]
    edges = None
    if cfg.variant == "extra_trees":
        edges = {int(f): uniform_random_edges(X_node[:, f], cfg.n_bins, rng) for f in candidates}

    if cfg.splitter == "exact":
        result = split_exact(
            X_node, y_node, candidates, cfg.metric,
            n_bins=cfg.n_bins, n_classes=n_classes, edges=edges, counter=counter,
        )
    else:
        result = mabsplit(
            X_node, y_node, candidates, cfg.metric,
            delta=cfg.delta, batch_size=cfg.batch_size, n_bins=cfg.n_bins,
            n_classes=n_classes, edges=edges, counter=counter,
            ci_policy=cfg.ci_policy, rng=rng,
        )
    if result is NO_SPLIT or node_impurity - result.objective < cfg.min_impurity_decrease:
        return _leaf(y_node, n_classes)

    go_left = X_node[:, result.feature] < result.threshold
    if not go_left.any() or go_left.all():
        return _leaf(y_node, n_classes)

    state["leaves"] += 1
    left = _grow(X, y, rows[go_left], depth + 1, cfg, feature_pool, rng, counter, n_classes, state)
    right = _grow(X, y, rows[~go_left], depth + 1, cfg, feature_pool, rng, counter, n_classes, state)
    return {
        "feature": int(result.feature),
        "threshold": float(result.threshold),
        "n": int(rows.size),
        "impurity": float(node_impurity),
        "objective": float(result.objective),
        "left": left,
        "right": right,
    }


def fit_forest(cfg: ForestConfig, X, y, seed: int = 0) -> Forest:
    """Train cfg.n_trees trees (or as many as the insertion budget allows)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be a non-empty 2-D array")
    n, m = X.shape
    if cfg.task == "classification":
        y = np.asarray(y)
        if not np.issubdtype(y.dtype, np.integer):
            raise ValueError("classification targets must be integer labels")
        n_classes = int(np.max(y)) + 1
        if n_classes < 2:
            raise ValueError("classification needs at least 2 classes")
    else:
        y = np.asarray(y, dtype=float)
        n_classes = None
    if y.shape != (n,):
        raise ValueError("y must have one target per row of X")

    root_ss = np.random.SeedSequence(seed)
    forest_rng = np.random.default_rng(root_ss.spawn(1)[0])
    tree_seeds = root_ss.spawn(cfg.n_trees)
    counter = SampleCounter(budget=cfg.budget)

    if cfg.variant == "random_patches":
        patch_rows = np.sort(forest_rng.choice(n, size=max(1, round(cfg.alpha_n * n)), replace=False))
        feature_pool = np.sort(forest_rng.choice(m, size=max(1, round(cfg.alpha_f * m)), replace=False))
    else:
        patch_rows = np.arange(n)
        feature_pool = np.arange(m)

    trees: list[dict] = []
    oob_rows: list[np.ndarray | None] = []
    exhausted = False
    for t in range(cfg.n_trees):
        rng = np.random.default_rng(tree_seeds[t])
        if cfg.variant == "rf":
            rows = rng.integers(0, n, size=n)
            oob = np.setdiff1d(np.arange(n), rows)
        else:
            rows = patch_rows
            oob = None
        try:
            tree = _grow(X, y, np.asarray(rows), 0, cfg, feature_pool, rng, counter, n_classes, {"leaves": 1})
        except BudgetExceeded:
            exhausted = True
            break
        trees.append(tree)
        oob_rows.append(oob)

    return Forest(
        config=cfg,
        task=cfg.task,
        n_features=m,
        n_classes=n_classes,
        trees=trees,
        oob_rows=oob_rows,
        n_insertions=counter.count,
        n_trees_completed=len(trees),
        budget_exhausted=exhausted,
    )


# ----- prediction ---------------------------------------------------------------


def _tree_apply(tree: dict, X: np.ndarray) -> list[tuple[np.ndarray, dict]]:
    """Route every row to its leaf; returns (row indices, leaf) pairs."""
    out = []
    stack = [(np.arange(X.shape[0]), tree)]
    while stack:
        idx, node = stack.pop()
        if idx.size == 0:
            continue
        if node.get("leaf"):
            out.append((idx, node))
            continue
        go_left = X[idx, node["feature"]] < node["threshold"]
        stack.append((idx[go_left], node["left"]))
        stack.append((idx[~go_left], node["right"]))
    return out


def predict_proba(forest: Forest, X) -> np.ndarray:
    """Mean of the per-tree leaf class-probability vectors."""
    if forest.task != "classification":
        raise ValueError("predict_proba requires a classification forest")
    if not forest.trees:
        raise ValueError("forest has no trained trees")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    probs = np.zeros((X.shape[0], forest.n_classes))
    for tree in forest.trees:
        for idx, leaf in _tree_apply(tree, X):
            counts = np.asarray(leaf["counts"], dtype=float)
            probs[idx] += counts / counts.sum()
    return probs / len(forest.trees)


def predict(forest: Forest, X):
    """Classification: argmax of mean probabilities (ties to the lowest class).

    Regression: mean of the per-tree leaf means.
    """
    if not forest.trees:
        raise ValueError("forest has no trained trees")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if forest.task == "classification":
        return np.argmax(predict_proba(forest, X), axis=1)
    acc = np.zeros(X.shape[0])
    for tree in forest.trees:
        for idx, leaf in _tree_apply(tree, X):
            acc[idx] += leaf["mean"]
    return acc / len(forest.trees)
