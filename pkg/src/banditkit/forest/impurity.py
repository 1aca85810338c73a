"""Impurity metrics, split objectives, and delta-method confidence radii.

Classification summaries are per-class count vectors; regression summaries
are (count, sum, sum-of-squares) triples. The split objective is the weighted
child impurity |L|/n * I(L) + |R|/n * I(R), whose argmin equals the argmin of
the impurity decrease since I(node) does not depend on the split.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm

CLASSIFICATION_METRICS = ("gini", "entropy")
REGRESSION_METRICS = ("mse",)

# Probabilities are clamped away from {0, 1} before differentiating; the
# entropy gradient diverges at 0.
EPS = 1e-9


def _gini(p: np.ndarray) -> float:
    return float(1.0 - np.square(p).sum())


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def impurity(metric: str, summary) -> float:
    """Node impurity from its summary; empty summaries are an error."""
    if metric in CLASSIFICATION_METRICS:
        counts = np.asarray(summary, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise ValueError("empty node summary")
        p = counts / total
        return _gini(p) if metric == "gini" else _entropy(p)
    if metric == "mse":
        count, total, sumsq = summary
        if count <= 0:
            raise ValueError("empty node summary")
        mean = total / count
        return max(float(sumsq / count - mean * mean), 0.0)
    raise ValueError(f"unknown impurity metric {metric!r}")


def split_objective(metric: str, left_summary, right_summary) -> float:
    """Weighted child impurity; an empty side degenerates to I(whole node)."""
    if metric in CLASSIFICATION_METRICS:
        left = np.asarray(left_summary, dtype=float)
        right = np.asarray(right_summary, dtype=float)
        n_l, n_r = left.sum(), right.sum()
        if n_l + n_r <= 0:
            raise ValueError("empty node summary")
        if n_l == 0 or n_r == 0:
            return impurity(metric, left + right)
        n = n_l + n_r
        return (n_l / n) * impurity(metric, left) + (n_r / n) * impurity(metric, right)
    if metric == "mse":
        c_l, s_l, q_l = left_summary
        c_r, s_r, q_r = right_summary
        if c_l + c_r <= 0:
            raise ValueError("empty node summary")
        if c_l == 0 or c_r == 0:
            return impurity(metric, (c_l + c_r, s_l + s_r, q_l + q_r))
        n = c_l + c_r
        return (c_l / n) * impurity(metric, (c_l, s_l, q_l)) + (c_r / n) * impurity(
            metric, (c_r, s_r, q_r)
        )
    raise ValueError(f"unknown impurity metric {metric!r}")


# ----- objectives as functions of estimated parameters -------------------------


def classification_objective(metric: str, p_left: np.ndarray, p_right: np.ndarray) -> float:
    """mu as a function of joint proportions (each side sums to its weight)."""
    p_left = np.asarray(p_left, dtype=float)
    p_right = np.asarray(p_right, dtype=float)
    w_l, w_r = p_left.sum(), p_right.sum()
    out = 0.0
    if w_l > 0.0:
        out += w_l * (_gini(p_left / w_l) if metric == "gini" else _entropy(p_left / w_l))
    if w_r > 0.0:
        out += w_r * (_gini(p_right / w_r) if metric == "gini" else _entropy(p_right / w_r))
    return out


def regression_objective(moments: np.ndarray) -> float:
    """mu from the moment vector (w_L, E[1_L y], E[1_L y^2], E[1_R y], E[1_R y^2])."""
    m1, m2, m3, m4, m5 = (float(v) for v in moments)
    out = m3 + m5
    if m1 > 0.0:
        out -= m2 * m2 / m1
    if m1 < 1.0:
        out -= m4 * m4 / (1.0 - m1)
    return out


def _classification_gradient(metric: str, p_left: np.ndarray, p_right: np.ndarray):
    """Partials of mu with respect to each joint proportion (both sides)."""
    w_l, w_r = p_left.sum(), p_right.sum()
    if metric == "gini":
        s_l = np.square(p_left).sum()
        s_r = np.square(p_right).sum()
        grad_l = -(2.0 * p_left * w_l - s_l) / (w_l * w_l)
        grad_r = -(2.0 * p_right * w_r - s_r) / (w_r * w_r)
    else:  # entropy
        grad_l = -np.log2(p_left / w_l)
        grad_r = -np.log2(p_right / w_r)
    return grad_l, grad_r


def _multinomial_cov(theta: np.ndarray) -> np.ndarray:
    return np.diag(theta) - np.outer(theta, theta)


def split_ci(metric: str, row, n_sampled: int, delta_step: float) -> float:
    """Delta-method confidence radius for one (feature, threshold) candidate.

    Classification rows are (p_left, p_right) joint-proportion vectors (2K
    cells, the last right-side cell implied by the rest); regression rows are
    the 5-entry moment vector of regression_objective plus the per-side
    (count, sum, sumsq) summaries needed for the higher moments. The radius
    is z(delta_step) * sqrt(grad' Sigma grad / n_sampled) with Sigma the
    single-draw covariance, proportions clamped to [EPS, 1-EPS].
    """
    if n_sampled < 1:
        return math.inf
    if not (0.0 < delta_step < 1.0):
        raise ValueError("delta_step must lie in (0, 1)")
    z = float(norm.ppf(1.0 - delta_step / 2.0))
    if metric in CLASSIFICATION_METRICS:
        p_left, p_right = row
        p_left = np.clip(np.asarray(p_left, dtype=float), EPS, 1.0 - EPS)
        p_right = np.clip(np.asarray(p_right, dtype=float), EPS, 1.0 - EPS)
        grad_l, grad_r = _classification_gradient(metric, p_left, p_right)
        # free coordinates: everything except the last right-side cell
        theta = np.concatenate([p_left, p_right[:-1]])
        grad = np.concatenate([grad_l, grad_r[:-1]]) - grad_r[-1]
        variance = float(grad @ _multinomial_cov(theta) @ grad) / n_sampled
        radius = z * math.sqrt(max(variance, 0.0))
        # z is infinite for vanishing delta_step; inf * 0 must stay conservative
        return radius if not math.isnan(radius) else math.inf
    if metric == "mse":
        moments, left_summary, right_summary = row
        sigma = _regression_moment_cov(np.asarray(moments, dtype=float), left_summary, right_summary)
        grad = _regression_gradient(np.asarray(moments, dtype=float))
        variance = float(grad @ sigma @ grad) / n_sampled
        radius = z * math.sqrt(max(variance, 0.0))
        return radius if not math.isnan(radius) else math.inf
    raise ValueError(f"unknown impurity metric {metric!r}")


def _regression_gradient(m: np.ndarray) -> np.ndarray:
    m1 = min(max(float(m[0]), EPS), 1.0 - EPS)
    m2, m4 = float(m[1]), float(m[3])
    return np.array(
        [
            m2 * m2 / (m1 * m1) - m4 * m4 / ((1.0 - m1) * (1.0 - m1)),
            -2.0 * m2 / m1,
            1.0,
            -2.0 * m4 / (1.0 - m1),
            1.0,
        ]
    )


def _side_gaussian_moments(summary) -> tuple[float, float]:
    """Within-side E[y^3], E[y^4] approximated from (count, sum, sumsq).

    The stored summaries carry only two moments, so the third and fourth are
    filled in with the Gaussian values mu^3 + 3 mu s^2 and
    mu^4 + 6 mu^2 s^2 + 3 s^4.
    """
    count, total, sumsq = summary
    if count <= 0:
        return 0.0, 0.0
    mu = total / count
    var = max(sumsq / count - mu * mu, 0.0)
    m3 = mu**3 + 3.0 * mu * var
    m4 = mu**4 + 6.0 * mu * mu * var + 3.0 * var * var
    return float(m3), float(m4)


def _regression_moment_cov(m: np.ndarray, left_summary, right_summary) -> np.ndarray:
    """Single-draw covariance of (1_L, 1_L y, 1_L y^2, 1_R y, 1_R y^2).

    Products of a left and a right component vanish (the indicators are
    disjoint), so the matrix is block-structured up to the mean outer product.
    """
    m1 = float(m[0])
    y3_l, y4_l = _side_gaussian_moments(left_summary)
    y3_r, y4_r = _side_gaussian_moments(right_summary)
    c_l = left_summary[0]
    c_r = right_summary[0]
    n = c_l + c_r
    # raw within-side expectations E[1_S y^p] over the whole sample
    e = np.zeros((3, 2))  # rows: y^2, y^3, y^4; cols: L, R
    if n > 0:
        e[0, 0] = left_summary[2] / n
        e[0, 1] = right_summary[2] / n
        e[1, 0] = y3_l * (c_l / n)
        e[1, 1] = y3_r * (c_r / n)
        e[2, 0] = y4_l * (c_l / n)
        e[2, 1] = y4_r * (c_r / n)
    raw = np.zeros((5, 5))
    raw[0, 0] = m1
    raw[0, 1] = raw[1, 0] = m[1]
    raw[0, 2] = raw[2, 0] = e[0, 0]
    raw[1, 1] = e[0, 0]
    raw[1, 2] = raw[2, 1] = e[1, 0]
    raw[2, 2] = e[2, 0]
    raw[3, 3] = e[0, 1]
    raw[3, 4] = raw[4, 3] = e[1, 1]
    raw[4, 4] = e[2, 1]
    return raw - np.outer(m, m)
