"""k-medoids clustering: exact PAM (BUILD + SWAP) and its bandit-accelerated twin.

Both solvers optimize the same loss, sum over points of the distance to the
nearest medoid, and count every metric invocation through the point set's
SampleCounter. The bandit variant runs each BUILD/SWAP decision as an
adaptive_search over candidate arms whose rewards are per-reference changes
in loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from banditkit.bandit import (
    EliminationConfig,
    SampleCounter,
    adaptive_search,
    arm_matrix_evaluator,
)

BUILTIN_METRICS = ("l1", "l2", "cosine")

# Candidates are scanned in blocks this wide during exact BUILD/SWAP passes;
# purely a vectorization knob, invisible in results and counts.
_SCAN_BLOCK = 128


class PointSet:
    """Immutable point matrix plus a counted dissimilarity.

    metric is one of the built-in names or a callable d(a, b) -> real taken
    as FROM a TO b (asymmetric dissimilarities are fine; no metric axioms are
    assumed). Every evaluated (source, target) pair adds one unit to
    `counter`, regardless of dimension.
    """

    def __init__(self, points: np.ndarray, metric: str | Callable = "l2"):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] < 1:
            raise ValueError("points must be a non-empty 2-D array")
        self.points = points
        self.metric = metric
        if isinstance(metric, str) and metric not in BUILTIN_METRICS:
            raise ValueError(f"unknown metric {metric!r}; use one of {BUILTIN_METRICS} or a callable")
        self.counter = SampleCounter()
        self._all = np.arange(points.shape[0])

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    # -- counted evaluation paths --

    def _rows_builtin(self, sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
        a = self.points[sources]
        b = self.points[targets]
        if self.metric == "l2":
            diff = a[:, None, :] - b[None, :, :]
            return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        if self.metric == "l1":
            return np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)
        # cosine distance; zero vectors get norm 1 so the value stays finite
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        na = np.where(na == 0.0, 1.0, na)
        nb = np.where(nb == 0.0, 1.0, nb)
        return 1.0 - (a @ b.T) / np.outer(na, nb)

    def distance_rows(self, sources, targets=None) -> np.ndarray:
        """(len(sources), len(targets)) dissimilarities; counts every pair."""
        sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
        targets = self._all if targets is None else np.asarray(targets, dtype=np.int64)
        self.counter.add(int(sources.size) * int(targets.size))
        if isinstance(self.metric, str):
            return self._rows_builtin(sources, targets)
        out = np.empty((sources.size, targets.size))
        for i, s in enumerate(sources):
            for j, t in enumerate(targets):
                out[i, j] = float(self.metric(self.points[s], self.points[t]))
        return out

    def distances(self, source: int, targets=None) -> np.ndarray:
        """Dissimilarities from one point to each target; counts len(targets)."""
        return self.distance_rows([source], targets)[0]


@dataclass
class MedoidConfiguration:
    """Medoid set with the nearest/second-nearest caches that price swaps.

    assignment[j] is the POSITION (0..k-1) in medoid_indices of j's nearest
    medoid. medoid_rows holds the cached distance row of each medoid (keyed
    by point index) so cache refreshes cost no new evaluations.
    """

    medoid_indices: list[int]
    nearest_dist: np.ndarray
    second_dist: np.ndarray
    assignment: np.ndarray
    n_distance_evals: int = 0
    n_swaps: int = 0
    n_swap_rounds: int = 0
    medoid_rows: dict[int, np.ndarray] | None = None

    @property
    def loss(self) -> float:
        return float(self.nearest_dist.sum())

    def to_json(self) -> dict:
        return {
            "medoid_indices": [int(m) for m in self.medoid_indices],
            "loss": self.loss,
            "n_distance_evals": int(self.n_distance_evals),
            "n_swaps": int(self.n_swaps),
        }


def clustering_loss(ps: PointSet, medoids: Sequence[int]) -> float:
    """Sum over points of the distance to the nearest medoid (counted)."""
    medoids = list(medoids)
    if not medoids:
        raise ValueError("medoid list must be non-empty")
    rows = ps.distance_rows(medoids)
    return float(rows.min(axis=0).sum())


def _caches_from_rows(medoids: list[int], rows: dict[int, np.ndarray]):
    stacked = np.stack([rows[m] for m in medoids])  # (k, n)
    order = np.argsort(stacked, axis=0, kind="stable")
    nearest = stacked[order[0], np.arange(stacked.shape[1])]
    assignment = order[0]
    if len(medoids) > 1:
        second = stacked[order[1], np.arange(stacked.shape[1])]
    else:
        second = np.full(stacked.shape[1], math.inf)
    return nearest, second, assignment


def _swap_delta_block(rows: np.ndarray, cfg: MedoidConfiguration) -> np.ndarray:
    """True loss change for every (candidate row, medoid position) pair.

    Per reference j the change is -d1 + min(d1, d(x,x_j)) when j is not
    assigned to the outgoing medoid, else -d1 + min(d2, d(x,x_j)); summing
    over j gives the exact post-swap loss minus the current loss. Input is a
    (n_candidates, n) distance block; output is (n_candidates, k).
    """
    k = len(cfg.medoid_indices)
    out_term = np.minimum(cfg.nearest_dist[None, :], rows)  # j not in C_m
    in_term = np.minimum(cfg.second_dist[None, :], rows)  # j in C_m
    base = (out_term - cfg.nearest_dist[None, :]).sum(axis=1)
    one_hot = (cfg.assignment[:, None] == np.arange(k)[None, :]).astype(float)
    return base[:, None] + (in_term - out_term) @ one_hot


def fastpam1_swap_reward(
    ps: PointSet, cfg: MedoidConfiguration, pair: tuple[int, int], reference: int
) -> float:
    """Cached swap summand for pair (medoid point index, candidate index).

    Evaluates exactly one fresh distance d(candidate, reference); everything
    else comes from the nearest/second-nearest caches.
    """
    m, x = pair
    m_pos = cfg.medoid_indices.index(m)
    dxj = float(ps.distances(x, [reference])[0])
    d1 = float(cfg.nearest_dist[reference])
    d2 = float(cfg.second_dist[reference])
    if cfg.assignment[reference] == m_pos:
        return -d1 + min(d2, dxj)
    return -d1 + min(d1, dxj)


# ----- exact PAM ---------------------------------------------------------------


def pam_build_exact(ps: PointSet, k: int) -> MedoidConfiguration:
    """Greedy BUILD: add the loss-minimizing medoid k times (ties: lowest index).

    Each candidate scan evaluates one full distance row; the winner's row is
    kept, so BUILD costs exactly sum over steps of (n_candidates * n) evals.
    """
    n = ps.n
    if not (1 <= k < n):
        raise ValueError("need 1 <= k < n")
    start = ps.counter.count
    medoids: list[int] = []
    rows: dict[int, np.ndarray] = {}
    d1 = np.full(n, math.inf)
    for _ in range(k):
        candidates = np.setdiff1d(ps._all, medoids, assume_unique=False)
        best_idx, best_loss, best_row = -1, math.inf, None
        for lo in range(0, candidates.size, _SCAN_BLOCK):
            block = candidates[lo : lo + _SCAN_BLOCK]
            block_rows = ps.distance_rows(block)
            losses = np.minimum(block_rows, d1[None, :]).sum(axis=1)
            pos = int(np.argmin(losses))
            if losses[pos] < best_loss:
                best_loss = float(losses[pos])
                best_idx = int(block[pos])
                best_row = block_rows[pos]
        medoids.append(best_idx)
        rows[best_idx] = best_row
        d1 = np.minimum(d1, best_row)
    nearest, second, assignment = _caches_from_rows(medoids, rows)
    return MedoidConfiguration(
        medoid_indices=medoids,
        nearest_dist=nearest,
        second_dist=second,
        assignment=assignment,
        n_distance_evals=ps.counter.count - start,
        medoid_rows=rows,
    )


def pam_swap_exact(
    ps: PointSet, cfg: MedoidConfiguration, max_swaps: int | None = None
) -> MedoidConfiguration:
    """Apply the single best loss-reducing swap until none remains.

    Scans all medoid x candidate pairs per round; one fresh distance row per
    candidate is shared across the k medoid slots. Ties break to the lowest
    (medoid position, candidate index).
    """
    n = ps.n
    k = len(cfg.medoid_indices)
    if max_swaps is None:
        max_swaps = 10 * k
    start = ps.counter.count
    medoids = list(cfg.medoid_indices)
    rows = dict(cfg.medoid_rows) if cfg.medoid_rows else {
        m: ps.distances(m) for m in medoids
    }
    nearest, second, assignment = _caches_from_rows(medoids, rows)
    work = MedoidConfiguration(medoids, nearest, second, assignment)
    n_swaps = 0
    rounds = 0
    while n_swaps < max_swaps:
        rounds += 1
        candidates = np.setdiff1d(ps._all, work.medoid_indices)
        best = (math.inf, (k, n), None)  # (delta, (m_pos, x), row)
        for lo in range(0, candidates.size, _SCAN_BLOCK):
            block = candidates[lo : lo + _SCAN_BLOCK]
            block_rows = ps.distance_rows(block)
            deltas = _swap_delta_block(block_rows, work)
            # flatten medoid-position-major so argmin honors (m_pos, x) order
            flat = int(np.argmin(deltas.T))
            m_pos, b = flat // block.size, flat % block.size
            key = (float(deltas[b, m_pos]), (m_pos, int(block[b])))
            if key < (best[0], best[1]):
                best = (key[0], key[1], block_rows[b])
        if best[0] >= 0.0 or not math.isfinite(best[0]):
            break
        m_pos, x = best[1]
        old = work.medoid_indices[m_pos]
        work.medoid_indices[m_pos] = int(x)
        rows.pop(old, None)
        rows[int(x)] = best[2]
        work.nearest_dist, work.second_dist, work.assignment = _caches_from_rows(
            work.medoid_indices, rows
        )
        n_swaps += 1
    work.n_distance_evals = cfg.n_distance_evals + (ps.counter.count - start)
    work.n_swaps = cfg.n_swaps + n_swaps
    work.n_swap_rounds = cfg.n_swap_rounds + rounds
    work.medoid_rows = rows
    return work


def pam_fit_exact(ps: PointSet, k: int, max_swaps: int | None = None) -> MedoidConfiguration:
    """BUILD followed by SWAP-to-convergence; the exact-PAM oracle pipeline."""
    return pam_swap_exact(ps, pam_build_exact(ps, k), max_swaps=max_swaps)


# ----- BanditPAM ----------------------------------------------------------------


@dataclass(frozen=True)
class BanditPamConfig:
    k: int
    delta: float | None = None  # None: 1/(1000 * n_targets) per search
    batch_size: int = 100
    ci_policy: str = "flat"
    max_swaps: int | None = None  # None: 10 * k
    use_fastpam1: bool = True
    sigma: float | None = None  # global override; None estimates per arm
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_swaps is not None and self.max_swaps < 0:
            raise ValueError("max_swaps must be >= 0")


def _elimination_config(cfg: BanditPamConfig) -> EliminationConfig:
    return EliminationConfig(
        delta=cfg.delta,
        batch_size=cfg.batch_size,
        sigma=cfg.sigma,
        ci_policy=cfg.ci_policy,
    )


def banditpam_fit(ps: PointSet, cfg: BanditPamConfig) -> MedoidConfiguration:
    """BanditPAM: every BUILD/SWAP decision is a best-arm search.

    BUILD arms are candidate points; SWAP arms are (medoid position,
    candidate) pairs encoded as m_pos * n + x so that lowest-ArmId
    tie-breaking is lexicographic. Rewards are per-reference loss changes;
    with use_fastpam1 one fresh distance row per candidate serves all k
    medoid slots in a batch.
    """
    n = ps.n
    if not (1 <= cfg.k < n):
        raise ValueError("need 1 <= k < n")
    start = ps.counter.count
    medoids: list[int] = []
    rows: dict[int, np.ndarray] = {}
    d1 = np.full(n, math.inf)

    # BUILD: k searches over non-medoid candidates.
    for step in range(cfg.k):
        targets = np.setdiff1d(ps._all, medoids)
        d1_snapshot = d1.copy()
        cap = np.where(np.isfinite(d1_snapshot), d1_snapshot, 0.0)

        @arm_matrix_evaluator
        def g_build(arm_ids, refs, _d1=d1_snapshot, _cap=cap):
            fresh = ps.distance_rows(arm_ids, refs)
            return np.minimum(fresh, _d1[refs][None, :]) - _cap[refs][None, :]

        outcome = adaptive_search(
            targets=targets,
            reference_size=n,
            g=g_build,
            config=_elimination_config(cfg),
            minimize=True,
            seed=cfg.seed,
            search_id=step,
        )
        winner = int(outcome.winner)
        row = ps.distances(winner)
        medoids.append(winner)
        rows[winner] = row
        d1 = np.minimum(d1, row)

    nearest, second, assignment = _caches_from_rows(medoids, rows)
    work = MedoidConfiguration(medoids, nearest, second, assignment)

    # SWAP: searches over (medoid position, candidate) pairs.
    max_swaps = cfg.max_swaps if cfg.max_swaps is not None else 10 * cfg.k
    n_swaps = 0
    rounds = 0
    while n_swaps < max_swaps:
        rounds += 1
        candidates = np.setdiff1d(ps._all, work.medoid_indices)
        pair_ids = (np.arange(cfg.k)[:, None] * n + candidates[None, :]).ravel()

        @arm_matrix_evaluator
        def g_swap(arm_ids, refs, _cfg=work):
            m_pos = arm_ids // n
            xs = arm_ids % n
            unique_x, inverse = np.unique(xs, return_inverse=True)
            if cfg.use_fastpam1:
                fresh = ps.distance_rows(unique_x, refs)[inverse]
            else:
                # One independent row per (m, x) arm: no sharing across the
                # k medoid slots, for the savings-factor comparison.
                fresh = ps.distance_rows(xs, refs)
            d1r = _cfg.nearest_dist[refs][None, :]
            d2r = _cfg.second_dist[refs][None, :]
            in_cm = _cfg.assignment[refs][None, :] == m_pos[:, None]
            capped = np.where(in_cm, np.minimum(d2r, fresh), np.minimum(d1r, fresh))
            return capped - d1r

        outcome = adaptive_search(
            targets=pair_ids,
            reference_size=n,
            g=g_swap,
            config=_elimination_config(cfg),
            minimize=True,
            seed=cfg.seed,
            search_id=cfg.k + rounds - 1,
        )
        if outcome.arm_stats[outcome.winner].mean_estimate >= 0.0:
            break
        m_pos, x = int(outcome.winner) // n, int(outcome.winner) % n
        row = ps.distances(x)
        exact_delta = float(_swap_delta_block(row[None, :], work)[0, m_pos])
        if exact_delta >= 0.0:
            break
        old = work.medoid_indices[m_pos]
        work.medoid_indices[m_pos] = x
        rows.pop(old, None)
        rows[x] = row
        work.nearest_dist, work.second_dist, work.assignment = _caches_from_rows(
            work.medoid_indices, rows
        )
        n_swaps += 1

    work.n_distance_evals = ps.counter.count - start
    work.n_swaps = n_swaps
    work.n_swap_rounds = rounds
    work.medoid_rows = rows
    return work
