"""Fixed-confidence best-arm identification via batched successive elimination.

The engine is generic: arms are integer ids, rewards come from a caller-supplied
sampler, and elimination proceeds by comparing per-arm confidence bounds until a
single candidate survives or an exact fallback resolves the remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ArmId = int

CI_POLICIES = ("flat", "union_bound_anytime")
SAMPLING_MODES = ("with_replacement", "without_replacement")

DEFAULT_SIGMA_FLOOR = 1e-12

# Cap for searches that have no finite reference set to fall back on.
DEFAULT_MAX_PULLS = 10_000


class BudgetExceeded(RuntimeError):
    """Raised when a SampleCounter would pass its budget."""


@dataclass
class SampleCounter:
    """Monotone tally of unit-cost work with optional budget enforcement."""

    count: int = 0
    budget: int | None = None

    def add(self, units: int = 1) -> None:
        if units < 0:
            raise ValueError("units must be non-negative")
        if self.budget is not None and self.count + units > self.budget:
            raise BudgetExceeded(
                f"adding {units} units would exceed budget {self.budget} "
                f"(current count {self.count})"
            )
        self.count += units

    def would_exceed(self, units: int) -> bool:
        return self.budget is not None and self.count + units > self.budget

    @property
    def remaining(self) -> int | None:
        if self.budget is None:
            return None
        return self.budget - self.count


@dataclass
class ArmStats:
    """Running estimate for one arm. Zero pulls means an uninformative CI."""

    mean_estimate: float = 0.0
    ci_radius: float = math.inf
    pulls: int = 0


@dataclass(frozen=True)
class EliminationConfig:
    """Shared knobs for one elimination search.

    delta=None defers to 1/(1000 * n_candidates), the empirically validated
    default. sigma=None estimates a per-arm variance proxy from the first
    batch; a scalar applies globally, an array maps to arms in id order.
    """

    delta: float | None = None
    batch_size: int = 100
    sigma: float | Sequence[float] | None = None
    max_pulls_per_arm: int | None = None
    ci_policy: str = "flat"
    sampling: str = "with_replacement"
    sigma_floor: float = DEFAULT_SIGMA_FLOOR

    def __post_init__(self) -> None:
        if self.delta is not None and not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.ci_policy not in CI_POLICIES:
            raise ValueError(f"ci_policy must be one of {CI_POLICIES}")
        if self.sampling not in SAMPLING_MODES:
            raise ValueError(f"sampling must be one of {SAMPLING_MODES}")
        if self.sigma is not None and np.any(np.asarray(self.sigma, dtype=float) < 0):
            raise ValueError("sigma must be non-negative")
        if self.max_pulls_per_arm is not None and self.max_pulls_per_arm < 1:
            raise ValueError("max_pulls_per_arm must be positive")


@dataclass
class SearchOutcome:
    winner: ArmId
    total_pulls: int
    eliminated_at: dict[ArmId, int]
    exact_fallback_used: bool
    # Final per-arm estimates; not part of the minimal contract but cheap to
    # surface and load-bearing for swap-delta checks and diagnostics.
    arm_stats: dict[ArmId, ArmStats] = field(default_factory=dict)


def search_rng(seed: int, search_id: int) -> np.random.Generator:
    """Counter-based random stream keyed by (global seed, search id)."""
    key = np.array(
        [np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(search_id & 0xFFFFFFFFFFFFFFFF)]
    )
    return np.random.Generator(np.random.Philox(key=key))


def hoeffding_ci(sigma: float, pulls: int, delta_step: float) -> float:
    """Confidence radius sigma * sqrt(2 * log(1/delta_step) / pulls).

    delta_step must already embed any union-bound inflation chosen by the
    caller. pulls = 0 yields an uninformative +inf radius.
    """
    if pulls == 0:
        return math.inf
    if pulls < 0:
        raise ValueError("pulls must be non-negative")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if not (0.0 < delta_step < 1.0):
        raise ValueError("delta_step must lie in (0, 1)")
    return sigma * math.sqrt(2.0 * math.log(1.0 / delta_step) / pulls)


def ci_delta_step(policy: str, delta: float, pulls: int, n_arms: int) -> float:
    """Per-step error budget for the given CI policy.

    flat: the raw delta. union_bound_anytime: delta / (4 * n * t^2), which
    makes hoeffding_ci reproduce the anytime radius sigma*sqrt(2*log(4nt^2/d)/t).
    """
    if policy == "flat":
        return delta
    if policy == "union_bound_anytime":
        return delta / (4.0 * n_arms * float(pulls) * float(pulls))
    raise ValueError(f"unknown ci_policy {policy!r}")


def estimate_sigma(first_batch_rewards: Sequence[float], sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> float:
    """Sample standard deviation (n-1 normalization) of a first batch.

    Batches too short to carry a spread estimate return sigma_floor.
    """
    rewards = np.asarray(first_batch_rewards, dtype=float)
    if rewards.size < 2:
        return sigma_floor
    return float(np.std(rewards, ddof=1))


def vectorize_scalar_g(g: Callable[[int, int], float]) -> Callable[[int, np.ndarray], np.ndarray]:
    """Adapt a pure scalar reward function to the batch calling convention."""

    def batched(target: int, reference_indices: np.ndarray) -> np.ndarray:
        return np.array([g(target, int(j)) for j in reference_indices], dtype=float)

    return batched


def arm_matrix_evaluator(func):
    """Mark g as evaluating all surviving arms on one batch in a single call.

    A marked callable receives (arm_id_array, reference_index_array) and must
    return a (len(arms), len(references)) reward matrix.
    """
    func.evaluates_arm_matrix = True
    return func


def _resolve_sigma_array(config: EliminationConfig, n: int) -> np.ndarray | None:
    if config.sigma is None:
        return None
    arr = np.asarray(config.sigma, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"per-arm sigma must have length {n}, got {arr.shape}")
    return arr.copy()


class _EliminationState:
    """Minimization-space bookkeeping shared by both search entry points."""

    def __init__(self, ids: np.ndarray, config: EliminationConfig, n_arms: int, delta: float):
        self.ids = ids
        self.config = config
        self.delta = delta
        self.n_arms = n_arms
        self.mu = np.zeros(n_arms)
        self.ci = np.full(n_arms, math.inf)
        self.pulls = np.zeros(n_arms, dtype=np.int64)
        self.active = np.ones(n_arms, dtype=bool)
        self.sigma = _resolve_sigma_array(config, n_arms)
        self.eliminated_at: dict[ArmId, int] = {}
        self.exact = np.zeros(n_arms, dtype=bool)

    def absorb_batch(self, rewards: np.ndarray, batch: int) -> None:
        """Fold a (n_active, batch) reward matrix into the surviving arms."""
        idx = np.flatnonzero(self.active)
        if self.sigma is None and int(self.pulls[idx[0]]) == 0:
            self.sigma = np.full(self.n_arms, self.config.sigma_floor)
            if batch >= 2:
                est = np.std(rewards, axis=1, ddof=1)
                self.sigma[idx] = np.maximum(est, self.config.sigma_floor)
        prev = self.pulls[idx].astype(float)
        self.mu[idx] = (prev * self.mu[idx] + rewards.sum(axis=1)) / (prev + batch)
        self.pulls[idx] += batch
        t = int(self.pulls[idx[0]])
        step = ci_delta_step(self.config.ci_policy, self.delta, t, self.n_arms)
        for i in idx:
            self.ci[i] = hoeffding_ci(float(self.sigma[i]), t, step)

    def prune(self) -> None:
        idx = np.flatnonzero(self.active)
        best_upper = np.min(self.mu[idx] + self.ci[idx])
        keep = self.mu[idx] - self.ci[idx] <= best_upper
        for i in idx[~keep]:
            self.active[i] = False
            self.eliminated_at[int(self.ids[i])] = int(self.pulls[i])

    def n_active(self) -> int:
        return int(self.active.sum())

    def outcome(self, minimize: bool, exact_fallback_used: bool) -> SearchOutcome:
        idx = np.flatnonzero(self.active)
        pos = idx[int(np.argmin(self.mu[idx]))]  # lowest index wins ties
        sign = 1.0 if minimize else -1.0
        stats = {
            int(self.ids[i]): ArmStats(
                mean_estimate=sign * float(self.mu[i]),
                ci_radius=0.0 if self.exact[i] else float(self.ci[i]),
                pulls=int(self.pulls[i]),
            )
            for i in range(self.n_arms)
        }
        for i in idx:
            if i != pos:
                self.eliminated_at.setdefault(int(self.ids[i]), int(self.pulls[i]))
        return SearchOutcome(
            winner=int(self.ids[pos]),
            total_pulls=int(self.pulls.sum()),
            eliminated_at=self.eliminated_at,
            exact_fallback_used=exact_fallback_used,
            arm_stats=stats,
        )


def successive_elimination(
    n_arms: int,
    reward_sampler: Callable[[ArmId], float],
    config: EliminationConfig | None = None,
    *,
    minimize: bool = False,
) -> SearchOutcome:
    """Identify the best arm among samplable candidates.

    Rewards are drawn one pull at a time from reward_sampler; the best arm is
    the argmax of true means (argmin with minimize=True). Stops early once one
    candidate survives, or at max_pulls_per_arm (default 10,000) with the best
    current estimate.
    """
    if n_arms <= 0:
        raise ValueError("n_arms must be positive")
    config = config or EliminationConfig()
    ids = np.arange(n_arms)
    delta = config.delta if config.delta is not None else 1.0 / (1000.0 * n_arms)
    state = _EliminationState(ids, config, n_arms, delta)
    if n_arms == 1:
        return state.outcome(minimize, exact_fallback_used=False)

    sign = 1.0 if minimize else -1.0
    cap = config.max_pulls_per_arm or DEFAULT_MAX_PULLS
    pulled = 0
    while state.n_active() > 1 and pulled < cap:
        batch = min(config.batch_size, cap - pulled)
        idx = np.flatnonzero(state.active)
        rewards = np.empty((idx.size, batch))
        for row, i in enumerate(idx):
            arm = int(ids[i])
            rewards[row] = [sign * float(reward_sampler(arm)) for _ in range(batch)]
        state.absorb_batch(rewards, batch)
        pulled += batch
        state.prune()
    return state.outcome(minimize, exact_fallback_used=False)


def adaptive_search(
    targets: int | Sequence[int],
    reference_size: int,
    g: Callable[[int, np.ndarray], np.ndarray],
    config: EliminationConfig | None = None,
    *,
    minimize: bool = True,
    seed: int = 0,
    search_id: int = 0,
) -> SearchOutcome:
    """Best-target search where each pull evaluates g on a reference point.

    Per batch, one shared set of reference indices updates every surviving
    target's running mean; targets are pruned when their lower bound exceeds
    the best upper bound. Once pulls reach the reference-set size the
    surviving objectives are computed exactly (the fallback), so no target
    ever costs more than 2 * reference_size evaluations.

    g is applied elementwise over a batch of reference indices:
    g(target_id, index_array) -> reward array. Wrap pure scalar functions
    with vectorize_scalar_g; mark whole-front evaluators with
    arm_matrix_evaluator to fold a batch in one call.
    """
    if isinstance(targets, (int, np.integer)):
        ids = np.arange(int(targets))
    else:
        ids = np.asarray(sorted(int(t) for t in targets), dtype=np.int64)
        if ids.size != np.unique(ids).size:
            raise ValueError("target ids must be unique")
    if ids.size == 0:
        raise ValueError("empty target set")
    if reference_size < 1:
        raise ValueError("reference_size must be >= 1")

    config = config or EliminationConfig()
    n = ids.size
    delta = config.delta if config.delta is not None else 1.0 / (1000.0 * n)
    state = _EliminationState(ids, config, n, delta)
    if n == 1:
        return state.outcome(minimize, exact_fallback_used=False)

    sign = 1.0 if minimize else -1.0
    matrix_aware = getattr(g, "evaluates_arm_matrix", False)

    def evaluate(active_ids: np.ndarray, refs: np.ndarray) -> np.ndarray:
        if matrix_aware:
            out = np.asarray(g(active_ids, refs), dtype=float)
            if out.shape != (active_ids.size, refs.size):
                raise ValueError("arm-matrix g returned a wrongly shaped reward matrix")
            return sign * out
        rewards = np.empty((active_ids.size, refs.size))
        for row, arm in enumerate(active_ids):
            rewards[row] = np.asarray(g(int(arm), refs), dtype=float)
        return sign * rewards

    rng = search_rng(seed, search_id)
    without = config.sampling == "without_replacement"
    permutation = rng.permutation(reference_size) if without else None
    cap = min(config.max_pulls_per_arm or reference_size, reference_size)

    pulled = 0
    fallback = False
    while state.n_active() > 1 and pulled < cap:
        batch = min(config.batch_size, cap - pulled)
        if without:
            refs = permutation[pulled : pulled + batch]
        else:
            refs = rng.integers(0, reference_size, size=batch)
        idx = np.flatnonzero(state.active)
        state.absorb_batch(evaluate(ids[idx], refs), batch)
        pulled += batch
        state.prune()

    if state.n_active() > 1:
        idx = np.flatnonzero(state.active)
        if without and pulled == reference_size:
            # A full without-replacement pass saw every reference exactly
            # once, so the running means are already the exact objectives.
            state.exact[idx] = True
        else:
            all_refs = np.arange(reference_size)
            exact = evaluate(ids[idx], all_refs)
            state.mu[idx] = exact.mean(axis=1)
            state.pulls[idx] += reference_size
            state.exact[idx] = True
        state.ci[idx] = 0.0
        fallback = True
    return state.outcome(minimize, exact_fallback_used=fallback)
