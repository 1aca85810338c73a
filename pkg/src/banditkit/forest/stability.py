"""Feature-importance scores and the stability of top-k feature selections."""

from __future__ import annotations

import numpy as np

from banditkit.forest.trees import Forest, predict


def mdi_importance(forest: Forest) -> np.ndarray:
    """Mean decrease in impurity per feature, normalized to sum to 1.

    Each internal node contributes (n_node / n_root) * (I(node) - objective)
    to its split feature, averaged over trees.
    """
    if not forest.trees:
        raise ValueError("forest has no trained trees")
    scores = np.zeros(forest.n_features)
    for tree in forest.trees:
        n_root = tree["n"]
        stack = [tree]
        while stack:
            node = stack.pop()
            if node.get("leaf"):
                continue
            scores[node["feature"]] += (node["n"] / n_root) * (node["impurity"] - node["objective"])
            stack.append(node["left"])
            stack.append(node["right"])
    scores /= len(forest.trees)
    total = scores.sum()
    return scores / total if total > 0 else scores


def oob_permutation_importance(forest: Forest, X, y, seed: int = 0) -> np.ndarray:
    """Mean out-of-bag score drop when one feature's column is shuffled.

    Requires per-tree out-of-bag rows, i.e. a bootstrap-trained (rf) forest.
    Scores are accuracy for classification and negative MSE for regression,
    so a larger drop always means a more important feature.
    """
    if not forest.trees:
        raise ValueError("forest has no trained trees")
    if all(oob is None for oob in forest.oob_rows):
        raise ValueError("forest was trained without out-of-bag rows")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    rng = np.random.default_rng(seed)

    def score(single_tree_forest, rows, X_eval):
        pred = predict(single_tree_forest, X_eval)
        if forest.task == "classification":
            return float(np.mean(pred == y[rows]))
        err = pred - y[rows]
        return -float(np.mean(err * err))

    drops = np.zeros(forest.n_features)
    n_used = 0
    for tree, oob in zip(forest.trees, forest.oob_rows):
        if oob is None or oob.size == 0:
            continue
        n_used += 1
        one = Forest(
            config=forest.config, task=forest.task, n_features=forest.n_features,
            n_classes=forest.n_classes, trees=[tree], oob_rows=[oob],
            n_insertions=0, n_trees_completed=1,
        )
        base = score(one, oob, X[oob])
        for f in range(forest.n_features):
            shuffled = X[oob].copy()
            shuffled[:, f] = shuffled[rng.permutation(oob.size), f]
            drops[f] += base - score(one, oob, shuffled)
    if n_used == 0:
        raise ValueError("no tree has a non-empty out-of-bag set")
    return drops / n_used


def feature_stability(importances, top_k: int) -> float:
    """Average pairwise Jaccard overlap of the forests' top-k feature sets.

    `importances` holds one importance vector per trained forest (>= 2).
    Ties in a vector resolve to the lowest feature index, so the score is
    deterministic. 1 means every forest picks the same top-k set; 0 means
    the sets are pairwise disjoint.
    """
    vectors = [np.asarray(v, dtype=float) for v in importances]
    if len(vectors) < 2:
        raise ValueError("stability needs importance vectors from at least 2 forests")
    m = vectors[0].size
    if any(v.size != m for v in vectors):
        raise ValueError("importance vectors must have equal length")
    if not 1 <= top_k <= m:
        raise ValueError("top_k must lie in [1, n_features]")
    tops = [set(np.argsort(-v, kind="stable")[:top_k].tolist()) for v in vectors]
    pair_scores = []
    for i in range(len(tops)):
        for j in range(i + 1, len(tops)):
            union = tops[i] | tops[j]
            pair_scores.append(len(tops[i] & tops[j]) / len(union))
    return float(np.mean(pair_scores))
