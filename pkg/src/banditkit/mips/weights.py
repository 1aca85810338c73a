"""Variance-optimal coordinate sampling weights and the weighted estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from banditkit.mips.core import MipsInstance


@dataclass(frozen=True)
class CoordinateWeights:
    w: np.ndarray
    beta: float | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("w must be a non-empty 1-D vector")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        total = w.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValueError("weights must have positive finite mass")
        object.__setattr__(self, "w", w / total)
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be non-negative")


def optimal_weights(instance: MipsInstance, beta: float | None = None) -> CoordinateWeights:
    """Weights minimizing the atoms' combined single-draw estimator variance.

    Exact solution: w_j proportional to sqrt(q_j^2 * sum_i v_ij^2). With a
    temperature `beta`, returns the cheaper approximation w_j proportional to
    |q_j|^(2*beta) instead (beta=0 gives the uniform distribution; large beta
    concentrates on the biggest query coordinates).
    """
    q = instance.query
    if not np.any(q != 0.0):
        raise ValueError("query must have at least one nonzero coordinate")
    if beta is None:
        col_sq = np.square(instance.atoms).sum(axis=0)
        raw = np.sqrt(q * q * col_sq)
    else:
        raw = np.abs(q) ** (2.0 * beta)
    total = raw.sum()
    if total <= 0:
        # all informative mass cancelled (e.g. all-zero atoms): any distribution works
        raw = np.ones(instance.d)
        total = float(instance.d)
    return CoordinateWeights(raw / total, beta=beta)


def weighted_estimate(instance: MipsInstance, weights: CoordinateWeights, atom: int, coordinate: int) -> float:
    """Single-draw unbiased estimate X = v_iJ * q_J / (d * w_J) of mu_i.

    The sampler must never draw a zero-weight coordinate; doing so is a
    contract violation and raises.
    """
    w_j = float(weights.w[coordinate])
    if w_j <= 0.0:
        raise ValueError("sampled a coordinate with zero weight")
    return float(instance.atoms[atom, coordinate] * instance.query[coordinate] / (instance.d * w_j))


def combined_estimator_variance(instance: MipsInstance, weights: CoordinateWeights) -> float:
    """Sum over atoms of Var(X_iJ) under J ~ w; the quantity optimal_weights minimizes."""
    q = instance.query
    atoms = instance.atoms
    d = instance.d
    w = weights.w
    mu = atoms @ q / d
    live = w > 0
    x = atoms[:, live] * q[live] / (d * w[live])
    second = (x * x) @ w[live]
    return float(np.sum(second - mu * mu))
