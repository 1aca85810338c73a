"""Synthetic dataset generators and dense-matrix CSV ingestion.

Every generator is a pure function of its arguments: the same seed yields the
same arrays, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# ----- note dictionary -------------------------------------------------------

# Scientific-pitch note table (C4 = 256 Hz) used by the song generator.
NOTE_FREQUENCIES_HZ: dict[str, float] = {
    "C4": 256.0,
    "E4": 330.0,
    "G4": 392.0,
    "C5": 512.0,
    "E5": 660.0,
    "G5": 784.0,
}

# Frequencies present in the dictionary but never in the song.
DISTRACTOR_FREQUENCIES_HZ: tuple[float, ...] = (128.0, 200.0, 300.0, 440.0, 600.0, 880.0)

# Mix weights: the C4-E4-G4 chord at 1:2:3 and the G4-C5-E5 chord at 3:2.5:1.5
# sound together for the whole piece, sharing the G4 wave (weight 3 once).
# Sustaining both chords keeps every note's least-squares coefficient against
# a full-length sine atom equal to its mix weight.
SONG_WEIGHTS: dict[str, float] = {"C4": 1.0, "E4": 2.0, "G4": 3.0, "C5": 2.5, "E5": 1.5}


@dataclass(frozen=True)
class NoteDictionary:
    """Sine-wave atom matrix with the note name and frequency of each row."""

    atoms: np.ndarray  # (n_atoms, n_samples), unit amplitude
    names: tuple[str, ...]
    frequencies_hz: np.ndarray  # actual (scaled) frequencies, one per atom

    def index_of(self, name: str) -> int:
        return self.names.index(name)


def gen_simple_song(
    t: int,
    sample_rate: int = 44_100,
    interval_seconds: float = 60.0,
    frequency_scale: float = 1.0,
) -> tuple[np.ndarray, NoteDictionary]:
    """Two-chord song plus a sine-wave dictionary for pursuit experiments.

    The signal spans 2t intervals of interval_seconds each, so its length is
    round(2 * t * interval_seconds * sample_rate) samples. Atoms cover the
    note table plus distractor frequencies, all scaled by frequency_scale
    (atom names keep the nominal, unscaled identity).

    Args:
        t: number of chord-pair repetitions; must be a positive integer.
        sample_rate: samples per second.
        interval_seconds: length of one chord interval.
        frequency_scale: multiplier applied to every table/distractor
            frequency; keeps ratios intact when shrinking below Nyquist.

    Returns:
        (signal, NoteDictionary)
    """
    if isinstance(t, bool) or not isinstance(t, (int, np.integer)):
        raise TypeError("t must be an integer")
    if t < 1:
        raise ValueError("t must be >= 1")
    n_samples = round(2 * t * interval_seconds * sample_rate)
    time = np.arange(n_samples) / sample_rate

    signal = np.zeros(n_samples)
    for name, weight in SONG_WEIGHTS.items():
        freq = NOTE_FREQUENCIES_HZ[name] * frequency_scale
        signal += weight * np.sin(2.0 * math.pi * freq * time)

    names: list[str] = list(NOTE_FREQUENCIES_HZ)
    nominal = list(NOTE_FREQUENCIES_HZ.values())
    for freq in DISTRACTOR_FREQUENCIES_HZ:
        names.append(f"{freq:g}Hz")
        nominal.append(freq)
    frequencies = np.asarray(nominal) * frequency_scale
    atoms = np.sin(2.0 * math.pi * frequencies[:, None] * time[None, :])
    return signal, NoteDictionary(atoms=atoms, names=tuple(names), frequencies_hz=frequencies)


def gen_simple_song_reduced(t: int) -> tuple[np.ndarray, NoteDictionary]:
    """Fast-test variant: 1 kHz sampling, 1 s intervals, frequencies halved.

    Halving keeps every frequency an integer below the 500 Hz Nyquist limit,
    so the discrete sines stay exactly orthogonal over each interval.
    """
    return gen_simple_song(t, sample_rate=1000, interval_seconds=1.0, frequency_scale=0.5)


# ----- vector/atom generators ------------------------------------------------


def gen_normal_custom(n: int, d: int, seed: int) -> np.ndarray:
    """Rows with per-row means: theta_i ~ N(0,1), entries ~ N(theta_i, 1)."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    theta = rng.normal(0.0, 1.0, size=n)
    return theta[:, None] + rng.normal(0.0, 1.0, size=(n, d))


def gen_correlated_normal_custom(
    n: int, d: int, seed: int, noise_scale: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Query q with entries ~ N(theta, 1); atom i = w_i * q + Gaussian noise.

    w_i ~ N(0,1) per atom. noise_scale=0 gives the exact-multiples limit.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    theta = rng.normal(0.0, 1.0)
    query = rng.normal(theta, 1.0, size=d)
    w = rng.normal(0.0, 1.0, size=n)
    atoms = w[:, None] * query[None, :] + noise_scale * rng.normal(0.0, 1.0, size=(n, d))
    return query, atoms


def gen_symmetric_normal(n: int, d: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Query and atoms all i.i.d. standard normal — no a-priori best atom."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    query = rng.normal(0.0, 1.0, size=d)
    atoms = rng.normal(0.0, 1.0, size=(n, d))
    return query, atoms


# ----- clustering / tree data -------------------------------------------------


def gen_gaussian_blobs(
    n: int, k: int, seed: int, dim: int = 2, sigma: float = 1.0, separation: float = 10.0
) -> tuple[np.ndarray, np.ndarray]:
    """k isotropic Gaussian blobs with centers on a grid at 10-sigma spacing.

    Returns (points, labels); points are dealt to blobs round-robin so every
    blob has within-one-of-equal size.
    """
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    rng = np.random.default_rng(seed)
    side = math.ceil(math.sqrt(k))
    centers = np.zeros((k, dim))
    for c in range(k):
        centers[c, 0] = (c % side) * separation * sigma
        centers[c, 1 % dim] = (c // side) * separation * sigma
    labels = np.arange(n) % k
    points = centers[labels] + rng.normal(0.0, sigma, size=(n, dim))
    return points, labels


def gen_classification_node(
    n: int, m: int, seed: int, gap_shift: float = 1.0, noise: float = 0.6
) -> tuple[np.ndarray, np.ndarray]:
    """Node sample where exactly one feature separates two balanced classes.

    The informative column sits at a seed-dependent position (never simply 0)
    and equals (2y-1)*gap_shift plus N(0, noise); all other columns are pure
    N(0,1) noise. Returns (X, y) with y in {0, 1}.
    """
    if n < 2 or m < 1:
        raise ValueError("need n >= 2 and m >= 1")
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n)
    X = rng.normal(0.0, 1.0, size=(n, m))
    info = int(rng.integers(0, m))
    X[:, info] = (2.0 * y - 1.0) * gap_shift + rng.normal(0.0, noise, size=n)
    return X, y


def gen_linear_regression(
    n: int, m: int, seed: int, noise: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Linear-model regression sample: y = X w + noise, w ~ N(0,1) fixed by seed."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.normal(0.0, 1.0, size=(n, m))
    w = rng.normal(0.0, 1.0, size=m)
    y = X @ w + noise * rng.normal(0.0, 1.0, size=n)
    return X, y


# ----- CSV ingestion ----------------------------------------------------------


class CsvFormatError(ValueError):
    """Malformed CSV input; message carries the 1-based line number."""


def _parse_cell(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise CsvFormatError(f"line {line_no}: non-numeric cell {token.strip()!r}") from None
    if not math.isfinite(value):
        raise CsvFormatError(f"line {line_no}: non-finite cell {token.strip()!r}")
    return value


def load_matrix_csv(path, has_labels: bool = False):
    """Read a dense numeric CSV into float64 arrays.

    Rows are samples. A single header line is tolerated (detected by any
    non-numeric cell on line 1). NaN/Inf cells, ragged rows, and non-numeric
    data cells are rejected with the offending line number.

    Returns the full matrix, or (features, targets) when has_labels is set
    (targets = last column).
    """
    rows: list[list[float]] = []
    width: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            tokens = line.split(",")
            if line_no == 1:
                try:
                    parsed = [_parse_cell(tok, line_no) for tok in tokens]
                except CsvFormatError:
                    width = len(tokens)  # header line
                    continue
            else:
                parsed = [_parse_cell(tok, line_no) for tok in tokens]
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise CsvFormatError(
                    f"line {line_no}: expected {width} columns, found {len(parsed)}"
                )
            rows.append(parsed)
    if not rows:
        raise CsvFormatError("no data rows found")
    matrix = np.asarray(rows, dtype=np.float64)
    if has_labels:
        if matrix.shape[1] < 2:
            raise CsvFormatError("need at least 2 columns to split off targets")
        return matrix[:, :-1], matrix[:, -1]
    return matrix


def save_matrix_csv(path, matrix: np.ndarray, header: list[str] | None = None) -> None:
    """Write a dense matrix with 17-significant-digit cells (lossless float64)."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in matrix:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
