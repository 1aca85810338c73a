"""Node-splitting solvers: exhaustive scan and adaptive-sampling search.

Both solvers score the same candidate grid — for every candidate feature, the
T-1 interior bin edges of that feature's histogram — and both measure work in
histogram insertions (one insertion = one point folded into one feature's
histogram). The adaptive solver samples points in batches, keeps confidence
intervals on every candidate's objective, and discards candidates whose lower
bound sits above the best upper bound; when the node is exhausted it falls
back to the exact answer, so with delta -> 0 it reproduces the exhaustive scan
including its insertion count.

A split sends values strictly below the threshold to the left child.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from banditkit.bandit import SampleCounter, ci_delta_step
from banditkit.forest.histogram import FeatureHistogram, equal_width_edges
from banditkit.forest.impurity import impurity, split_ci

DEFAULT_N_BINS = 10
DEFAULT_BATCH_SIZE = 1000

# Returned when no candidate feature varies inside the node.
NO_SPLIT = None


@dataclass
class SplitResult:
    feature: int
    bin_index: int
    threshold: float
    objective: float
    n_insertions: int


def _is_classification(metric: str) -> bool:
    if metric in ("gini", "entropy"):
        return True
    if metric == "mse":
        return False
    raise ValueError(f"unknown impurity metric: {metric!r}")


def _build_histograms(X, y, features, metric, n_bins, n_classes, edges):
    """One histogram per candidate feature that actually varies in the node.

    `edges` may carry pre-drawn (e.g. random) edges per feature; otherwise
    equal-width edges over the node's observed range are used.
    """
    hists = []
    for f in features:
        col = X[:, f]
        if edges is not None and f in edges:
            e = np.asarray(edges[f], dtype=float)
            if e[-1] <= e[0]:
                continue
            hists.append(FeatureHistogram(f, e, n_classes if _is_classification(metric) else None, equal_width=False))
        else:
            lo, hi = float(np.min(col)), float(np.max(col))
            if hi <= lo:
                continue
            e = equal_width_edges(col, n_bins)
            hists.append(FeatureHistogram(f, e, n_classes if _is_classification(metric) else None))
    return hists


def _objective_curve(metric: str, hist: FeatureHistogram) -> np.ndarray:
    """Weighted child impurity at each threshold, from the inserted points.

    A threshold that leaves one side empty scores the impurity of everything
    inserted so far (i.e. no improvement over not splitting).
    """
    n = hist.n_inserted
    if _is_classification(metric):
        left, right = hist.left_right_counts()
        parent = left[0] + right[0] if left.shape[0] else None
        w_l = left.sum(axis=1)
        w_r = right.sum(axis=1)
        if metric == "gini":
            with np.errstate(divide="ignore", invalid="ignore"):
                term_l = w_l - (left * left).sum(axis=1) / w_l
                term_r = w_r - (right * right).sum(axis=1) / w_r
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                pl = left / w_l[:, None]
                pr = right / w_r[:, None]
                term_l = -(np.where(left > 0, left * np.log2(pl, where=left > 0), 0.0)).sum(axis=1)
                term_r = -(np.where(right > 0, right * np.log2(pr, where=right > 0), 0.0)).sum(axis=1)
        curve = (np.where(w_l > 0, term_l, 0.0) + np.where(w_r > 0, term_r, 0.0)) / n
        degenerate = (w_l == 0) | (w_r == 0)
        if np.any(degenerate):
            curve[degenerate] = impurity(metric, parent)
    else:
        left, right = hist.left_right_moments()
        c_l, s_l, q_l = left[:, 0], left[:, 1], left[:, 2]
        c_r, s_r, q_r = right[:, 0], right[:, 1], right[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            term_l = q_l - s_l * s_l / c_l
            term_r = q_r - s_r * s_r / c_r
        curve = (np.where(c_l > 0, term_l, 0.0) + np.where(c_r > 0, term_r, 0.0)) / n
        curve = np.maximum(curve, 0.0)
        degenerate = (c_l == 0) | (c_r == 0)
        if np.any(degenerate):
            parent = (c_l[0] + c_r[0], s_l[0] + s_r[0], q_l[0] + q_r[0])
            curve[degenerate] = impurity(metric, parent)
    return curve


def _ci_rows(metric: str, hist: FeatureHistogram):
    """Per-threshold inputs for split_ci, as expectations over inserted points."""
    n = hist.n_inserted
    rows = []
    if _is_classification(metric):
        left, right = hist.left_right_counts()
        for t in range(hist.n_thresholds):
            rows.append((left[t] / n, right[t] / n))
    else:
        left, right = hist.left_right_moments()
        for t in range(hist.n_thresholds):
            c_l, s_l, q_l = left[t]
            _, s_r, q_r = right[t]
            moments = np.array([c_l / n, s_l / n, q_l / n, s_r / n, q_r / n])
            rows.append((moments, tuple(left[t]), tuple(right[t])))
    return rows


def _pick_winner(hists, curves, active_masks):
    """Lowest objective; ties go to the lowest (feature, bin) pair.

    Histograms arrive sorted by feature index and within a feature the curve
    is indexed by bin, so the first global argmin is the canonical winner.
    """
    best = None
    for hist, curve, mask in zip(hists, curves, active_masks):
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            continue
        t = idx[np.argmin(curve[idx])]
        key = curve[t]
        if best is None or key < best[0]:
            best = (key, hist, int(t))
    if best is None:
        return NO_SPLIT
    key, hist, t = best
    return hist, t, float(key)


def split_exact(
    X,
    y,
    features,
    metric: str = "gini",
    *,
    n_bins: int = DEFAULT_N_BINS,
    n_classes: int | None = None,
    edges: dict | None = None,
    counter: SampleCounter | None = None,
):
    """Exhaustive histogram split: every node point lands in every histogram."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    features = sorted(int(f) for f in features)
    if _is_classification(metric) and n_classes is None:
        n_classes = int(np.max(y)) + 1 if y.size else 0
    hists = _build_histograms(X, y, features, metric, n_bins, n_classes, edges)
    if not hists:
        return NO_SPLIT
    n = X.shape[0]
    total = 0
    for hist in hists:
        if counter is not None:
            counter.add(n)
        hist.insert(X[:, hist.feature], y)
        total += n
    curves = [_objective_curve(metric, h) for h in hists]
    masks = [np.ones(h.n_thresholds, dtype=bool) for h in hists]
    picked = _pick_winner(hists, curves, masks)
    if picked is NO_SPLIT:
        return NO_SPLIT
    hist, t, obj = picked
    return SplitResult(hist.feature, t, float(hist.thresholds[t]), obj, total)


def mabsplit(
    X,
    y,
    features,
    metric: str = "gini",
    *,
    delta: float = 0.01,
    batch_size: int = DEFAULT_BATCH_SIZE,
    n_bins: int = DEFAULT_N_BINS,
    n_classes: int | None = None,
    edges: dict | None = None,
    counter: SampleCounter | None = None,
    ci_policy: str = "flat",
    sampling: str = "without_replacement",
    rng: np.random.Generator | None = None,
):
    """Adaptive split search over the same candidate grid as split_exact.

    Points are drawn in batches (without replacement by default) and folded
    only into the histograms of features that still own a live candidate.
    Candidate (feature, threshold) pairs are discarded once their lower
    confidence bound clears the lowest upper bound. Exhausting the node
    triggers the exact fallback.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    features = sorted(int(f) for f in features)
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if sampling not in ("without_replacement", "with_replacement"):
        raise ValueError(f"unknown sampling mode: {sampling!r}")
    if rng is None:
        rng = np.random.default_rng()
    if _is_classification(metric) and n_classes is None:
        n_classes = int(np.max(y)) + 1 if y.size else 0

    hists = _build_histograms(X, y, features, metric, n_bins, n_classes, edges)
    if not hists:
        return NO_SPLIT
    n = X.shape[0]
    n_arms = sum(h.n_thresholds for h in hists)
    masks = [np.ones(h.n_thresholds, dtype=bool) for h in hists]
    if sampling == "without_replacement":
        order = rng.permutation(n)
    used = 0
    total = 0

    while True:
        live = [i for i, m in enumerate(masks) if m.any()]
        take = min(batch_size, n - used)

        if used >= n:
            # Node exhausted. Without replacement the survivors' statistics
            # are already exact; with replacement, rebuild them from scratch.
            if sampling == "with_replacement":
                fresh = _build_histograms(
                    X, y, [hists[i].feature for i in live], metric, n_bins, n_classes, edges
                )
                for j, i in enumerate(live):
                    if counter is not None:
                        counter.add(n)
                    fresh[j].insert(X[:, fresh[j].feature], y)
                    total += n
                    hists[i] = fresh[j]
            curves = [_objective_curve(metric, hists[i]) for i in live]
            picked = _pick_winner([hists[i] for i in live], curves, [masks[i] for i in live])
            break

        if counter is not None:
            counter.add(take * len(live))
        if sampling == "without_replacement":
            batch = order[used : used + take]
        else:
            batch = rng.integers(0, n, size=take)
        for i in live:
            hists[i].insert(X[batch, hists[i].feature], y[batch])
            total += take
        used += take

        delta_step = ci_delta_step(ci_policy, delta, used, n_arms)
        best_ucb = np.inf
        curves = {}
        radii = {}
        for i in live:
            curve = _objective_curve(metric, hists[i])
            rows = _ci_rows(metric, hists[i])
            r = np.full(hists[i].n_thresholds, np.inf)
            for t in np.flatnonzero(masks[i]):
                r[t] = split_ci(metric, rows[t], used, delta_step)
            curves[i] = curve
            radii[i] = r
            ucb = np.min((curve + r)[masks[i]])
            best_ucb = min(best_ucb, ucb)
        for i in live:
            keep = curves[i] - radii[i] <= best_ucb
            masks[i] &= keep

        remaining = sum(int(masks[i].sum()) for i in live)
        if remaining <= 1:
            live = [i for i in live if masks[i].any()]
            picked = _pick_winner(
                [hists[i] for i in live], [curves[i] for i in live], [masks[i] for i in live]
            )
            break

    if picked is NO_SPLIT:
        return NO_SPLIT
    hist, t, obj = picked
    return SplitResult(hist.feature, t, float(hist.thresholds[t]), obj, total)
