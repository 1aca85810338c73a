"""Per-feature histograms with O(1) insertion for equal-width bins."""

from __future__ import annotations

import numpy as np


class FeatureHistogram:
    """T-bin summary of one feature's values and their targets.

    Equal-width edges index bins arithmetically; uneven (random) edges fall
    back to binary search. Classification tracks per-bin class counts;
    regression tracks per-bin (count, sum, sum-of-squares).
    """

    def __init__(self, feature: int, edges: np.ndarray, n_classes: int | None, equal_width: bool = True):
        edges = np.asarray(edges, dtype=float)
        if edges.size < 2:
            raise ValueError("need at least 2 edges")
        self.feature = int(feature)
        self.edges = edges
        self.equal_width = equal_width
        self.n_bins = edges.size - 1
        self.n_classes = n_classes
        self.n_inserted = 0
        if n_classes is None:
            self.bin_count = np.zeros(self.n_bins)
            self.bin_sum = np.zeros(self.n_bins)
            self.bin_sumsq = np.zeros(self.n_bins)
        else:
            self.counts = np.zeros((self.n_bins, n_classes))

    @property
    def n_thresholds(self) -> int:
        return self.n_bins - 1

    @property
    def thresholds(self) -> np.ndarray:
        return self.edges[1:-1]

    def bin_indices(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        lo, hi = self.edges[0], self.edges[-1]
        if self.equal_width:
            width = (hi - lo) / self.n_bins
            if width <= 0.0:
                return np.zeros(values.size, dtype=np.int64)
            raw = np.floor((values - lo) / width).astype(np.int64)
        else:
            raw = np.searchsorted(self.edges[1:-1], values, side="right")
        return np.clip(raw, 0, self.n_bins - 1)

    def insert(self, values: np.ndarray, targets: np.ndarray) -> None:
        """Fold a batch into the bins; one bin increment per value."""
        bins = self.bin_indices(values)
        self.n_inserted += int(bins.size)
        if self.n_classes is None:
            targets = np.asarray(targets, dtype=float)
            self.bin_count += np.bincount(bins, minlength=self.n_bins)
            self.bin_sum += np.bincount(bins, weights=targets, minlength=self.n_bins)
            self.bin_sumsq += np.bincount(bins, weights=targets * targets, minlength=self.n_bins)
        else:
            labels = np.asarray(targets, dtype=np.int64)
            flat = bins * self.n_classes + labels
            self.counts += np.bincount(
                flat, minlength=self.n_bins * self.n_classes
            ).reshape(self.n_bins, self.n_classes)

    # -- cumulative views used by the split objective ---------------------------

    def left_right_counts(self):
        """Classification: (T-1, K) left and right class counts per threshold."""
        cum = np.cumsum(self.counts, axis=0)
        left = cum[:-1]
        right = cum[-1][None, :] - left
        return left, right

    def left_right_moments(self):
        """Regression: per-threshold (count, sum, sumsq) for each side."""
        c = np.cumsum(self.bin_count)
        s = np.cumsum(self.bin_sum)
        q = np.cumsum(self.bin_sumsq)
        left = np.stack([c[:-1], s[:-1], q[:-1]], axis=1)
        right = np.stack([c[-1] - c[:-1], s[-1] - s[:-1], q[-1] - q[:-1]], axis=1)
        return left, right


def equal_width_edges(values: np.ndarray, n_bins: int) -> np.ndarray:
    lo = float(np.min(values))
    hi = float(np.max(values))
    return np.linspace(lo, hi, n_bins + 1)


def uniform_random_edges(values: np.ndarray, n_bins: int, rng: np.random.Generator) -> np.ndarray:
    """ExtraTrees-style edges: interior cut points drawn uniformly in the range."""
    lo = float(np.min(values))
    hi = float(np.max(values))
    if hi <= lo:
        return np.full(n_bins + 1, lo)
    interior = np.sort(rng.uniform(lo, hi, size=n_bins - 1))
    return np.concatenate([[lo], interior, [hi]])
