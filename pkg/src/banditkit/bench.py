"""Experiment harness: run algorithms on generators, count work, fit slopes.

Sample-complexity units per algorithm family:

* k-medoids — pairwise distance evaluations,
* forests — histogram insertions,
* MIPS — coordinate multiplications (BanditMIPS-alpha's one-off sort cost is
  reported separately in the answer, never folded in).

Wall-clock time is recorded for reference but plays no role in any check.
Confidence intervals over seeds follow the mean +/- 1.96 * stderr convention.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

from banditkit import data as datagen
from banditkit.bandit import SampleCounter
from banditkit.forest import ForestConfig, fit_forest, mabsplit, split_exact
from banditkit.kmedoids import (
    BanditPamConfig,
    PointSet,
    banditpam_fit,
    pam_build_exact,
    pam_fit_exact,
)
from banditkit.mips import (
    MipsInstance,
    banditmips,
    banditmips_alpha,
    bucket_ae,
    naive_mips,
    topk_mips,
)

SCHEMA_VERSION = "1"

CSV_COLUMNS = (
    "schema_version",
    "algorithm",
    "generator",
    "n",
    "d",
    "k",
    "seed",
    "delta",
    "sample_complexity",
    "wall_ms",
    "correct",
    "answer",
)


class UsageError(ValueError):
    """Bad experiment spec: unknown algorithm/generator or invalid arguments."""


@dataclass
class ExperimentRecord:
    algorithm: str
    generator: str | None
    n: int | None
    d: int | None
    k: int | None
    seed: int
    delta: float | None
    sample_complexity: int
    wall_ms: float
    correct: bool | None
    answer: dict[str, Any]
    schema_version: str = SCHEMA_VERSION


# ----- generators ---------------------------------------------------------------


def build_problem(spec: dict) -> dict:
    """Materialize the generator named in the spec into problem arrays."""
    name = spec.get("generator")
    seed = int(spec.get("seed", 0))
    n = spec.get("n")
    d = spec.get("d")
    k = spec.get("k")
    if name == "normal_custom":
        # one extra row plays the query so atoms and query share the model
        mat = datagen.gen_normal_custom(int(n) + 1, int(d), seed)
        return {"query": mat[0], "atoms": mat[1:]}
    if name == "correlated_normal_custom":
        query, atoms = datagen.gen_correlated_normal_custom(int(n), int(d), seed)
        return {"query": query, "atoms": atoms}
    if name == "symmetric_normal":
        query, atoms = datagen.gen_symmetric_normal(int(n), int(d), seed)
        return {"query": query, "atoms": atoms}
    if name == "gaussian_blobs":
        points, labels = datagen.gen_gaussian_blobs(int(n), int(k or 5), seed)
        return {"points": points, "labels": labels}
    if name == "classification_node":
        X, y = datagen.gen_classification_node(int(n), int(d or 20), seed)
        return {"X": X, "y": y}
    if name == "linear_regression":
        X, y = datagen.gen_linear_regression(int(n), int(d or 20), seed)
        return {"X": X, "y": y}
    if name == "simple_song":
        signal, dictionary = datagen.gen_simple_song_reduced(int(spec.get("t", 1)))
        return {"signal": signal, "dictionary": dictionary}
    raise UsageError(f"unknown generator {name!r}")


# ----- algorithm runners --------------------------------------------------------


# Variance proxies baked into the experiment harness for the synthetic
# generators.  The normal families have unit coordinate noise, so sigma = 1 is
# the honest scale; the estimated-sigma path inflates by 3x (deliberately
# conservative for library use) and would stop most eliminations dead on these
# benchmarks.  An explicit spec["sigma"] always wins.
GENERATOR_SIGMA = {
    "normal_custom": 1.0,
    "correlated_normal_custom": 1.0,
    "symmetric_normal": 1.0,
    "simple_song": 25.0,
}


def _mips_instance(problem: dict, spec: dict) -> MipsInstance:
    sigma = spec.get("sigma")
    if sigma is None and spec.get("bounds") is None:
        sigma = GENERATOR_SIGMA.get(spec.get("generator"))
    return MipsInstance(
        problem["query"],
        problem["atoms"],
        sigma=sigma,
        delta=float(spec.get("delta", 0.001)),
        bounds=spec.get("bounds"),
    )


def _run_mips(spec: dict, problem: dict):
    algorithm = spec["algorithm"]
    instance = _mips_instance(problem, spec)
    batch = int(spec.get("batch_size", 16))
    seed = int(spec.get("seed", 0))
    if algorithm == "naive_mips":
        answer = naive_mips(instance)
    elif algorithm == "banditmips":
        answer = banditmips(instance, batch_size=batch, seed=seed)
    elif algorithm == "banditmips_alpha":
        answer = banditmips_alpha(instance, batch_size=batch)
    elif algorithm == "topk_mips":
        answer = topk_mips(instance, int(spec.get("top_k", 1)), batch_size=batch, seed=seed)
    elif algorithm == "bucket_ae":
        answer = bucket_ae(instance, int(spec.get("bucket_size", 30)), batch_size=batch, seed=seed)
    else:  # pragma: no cover - guarded by the registry
        raise UsageError(f"unknown MIPS algorithm {algorithm!r}")

    correct = None
    if spec.get("oracle_check"):
        oracle = naive_mips(instance)
        if algorithm == "topk_mips":
            k = int(spec.get("top_k", 1))
            true_top = set(np.argsort(-answer_mu(oracle), kind="stable")[:k].tolist())
            correct = set(answer.winners) == true_top
        else:
            correct = answer.winner == oracle.winner
    return answer.n_multiplications, correct, answer.to_json()


def answer_mu(answer) -> np.ndarray:
    return np.asarray(answer.mu_hats, dtype=float)


def _run_kmedoids(spec: dict, problem: dict):
    algorithm = spec["algorithm"]
    k = int(spec.get("k", 5))
    ps = PointSet(problem["points"], metric=spec.get("metric", "l2"))
    if algorithm == "pam_build_exact":
        cfg = pam_build_exact(ps, k)
    elif algorithm == "pam_exact":
        cfg = pam_fit_exact(ps, k)
    elif algorithm == "banditpam":
        cfg = banditpam_fit(
            ps,
            BanditPamConfig(
                k=k,
                delta=spec.get("delta"),
                batch_size=int(spec.get("batch_size", 100)),
                seed=int(spec.get("seed", 0)),
            ),
        )
    else:  # pragma: no cover
        raise UsageError(f"unknown k-medoids algorithm {algorithm!r}")

    correct = None
    if spec.get("oracle_check"):
        if algorithm.startswith("pam"):
            correct = True
        else:
            oracle_ps = PointSet(problem["points"], metric=spec.get("metric", "l2"))
            oracle = pam_fit_exact(oracle_ps, k)
            correct = set(cfg.medoid_indices) == set(oracle.medoid_indices)
    return ps.counter.count, correct, cfg.to_json()


def _run_split(spec: dict, problem: dict):
    algorithm = spec["algorithm"]
    X, y = problem["X"], problem["y"]
    metric = spec.get("metric", "gini" if np.issubdtype(np.asarray(y).dtype, np.integer) else "mse")
    features = list(range(X.shape[1]))
    counter = SampleCounter()
    if algorithm == "split_exact":
        result = split_exact(X, y, features, metric, counter=counter)
    elif algorithm == "mabsplit":
        result = mabsplit(
            X, y, features, metric,
            delta=float(spec.get("delta", 0.01)),
            batch_size=int(spec.get("batch_size", 1000)),
            counter=counter,
            rng=np.random.default_rng(int(spec.get("seed", 0))),
        )
    else:  # pragma: no cover
        raise UsageError(f"unknown split algorithm {algorithm!r}")

    answer = (
        {"feature": None}
        if result is None
        else {
            "feature": result.feature,
            "bin_index": result.bin_index,
            "threshold": result.threshold,
            "objective": result.objective,
        }
    )
    correct = None
    if spec.get("oracle_check"):
        oracle = split_exact(X, y, features, metric)
        if result is None or oracle is None:
            correct = result is oracle
        else:
            correct = (result.feature, result.bin_index) == (oracle.feature, oracle.bin_index)
    return counter.count, correct, answer


def _run_forest(spec: dict, problem: dict):
    X, y = problem["X"], problem["y"]
    metric = spec.get("metric", "gini" if np.issubdtype(np.asarray(y).dtype, np.integer) else "mse")
    cfg = ForestConfig(
        variant=spec.get("variant", "rf"),
        n_trees=int(spec.get("n_trees", 10)),
        metric=metric,
        splitter=spec.get("splitter", "exact"),
        delta=float(spec.get("delta", 0.01)),
        batch_size=int(spec.get("batch_size", 1000)),
        budget=spec.get("budget"),
        max_depth=spec.get("max_depth"),
    )
    forest = fit_forest(cfg, X, y, seed=int(spec.get("seed", 0)))
    report = forest.report(X, y)
    return forest.n_insertions, None, report


_FAMILIES = {
    "naive_mips": _run_mips,
    "banditmips": _run_mips,
    "banditmips_alpha": _run_mips,
    "topk_mips": _run_mips,
    "bucket_ae": _run_mips,
    "pam_build_exact": _run_kmedoids,
    "pam_exact": _run_kmedoids,
    "banditpam": _run_kmedoids,
    "split_exact": _run_split,
    "mabsplit": _run_split,
    "fit_forest": _run_forest,
}

# exact counterpart used for speedup denominators in sweeps
_ORACLES = {
    "banditmips": "naive_mips",
    "banditmips_alpha": "naive_mips",
    "topk_mips": "naive_mips",
    "bucket_ae": "naive_mips",
    "banditpam": "pam_exact",
    "mabsplit": "split_exact",
}


def run_experiment(spec: dict) -> ExperimentRecord:
    """Execute one (algorithm, generator, seed) cell with instrumented counters."""
    algorithm = spec.get("algorithm")
    if algorithm not in _FAMILIES:
        raise UsageError(f"unknown algorithm {algorithm!r}; expected one of {sorted(_FAMILIES)}")
    problem = spec["problem"] if "problem" in spec else build_problem(spec)
    start = time.perf_counter()
    complexity, correct, answer = _FAMILIES[algorithm](spec, problem)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return ExperimentRecord(
        algorithm=algorithm,
        generator=spec.get("generator"),
        n=None if spec.get("n") is None else int(spec["n"]),
        d=None if spec.get("d") is None else int(spec["d"]),
        k=None if spec.get("k") is None else int(spec["k"]),
        seed=int(spec.get("seed", 0)),
        delta=None if spec.get("delta") is None else float(spec["delta"]),
        sample_complexity=int(complexity),
        wall_ms=wall_ms,
        correct=correct,
        answer=answer,
    )


# ----- fits ---------------------------------------------------------------------


def loglog_slope(points) -> tuple[float, float]:
    """Least-squares slope and R^2 of log(y) against log(x)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (x, y) points")
    if np.any(pts <= 0):
        raise ValueError("log-log fit needs strictly positive coordinates")
    lx = np.log(pts[:, 0])
    ly = np.log(pts[:, 1])
    slope, intercept = np.polyfit(lx, ly, 1)
    residuals = ly - (slope * lx + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res < 1e-12 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return float(slope), float(r_squared)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float

    @property
    def slope_ci95(self) -> tuple[float, float]:
        return (self.slope - 1.96 * self.slope_stderr, self.slope + 1.96 * self.slope_stderr)


def linear_fit(x, y) -> LinearFit:
    """Plain least squares y = a x + b with the slope's standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 3:
        raise ValueError("need at least 3 points")
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 and ss_res < 1e-12 else (1.0 - ss_res / ss_tot if ss_tot else 0.0)
    sxx = float(np.sum((x - x.mean()) ** 2))
    dof = x.size - 2
    stderr = float(np.sqrt(ss_res / dof / sxx)) if dof > 0 and sxx > 0 else float("inf")
    return LinearFit(float(slope), float(intercept), r_squared, stderr)


def mean_ci(values) -> tuple[float, float]:
    """Mean and 1.96 * stderr half-width over seeds."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("no values")
    if arr.size == 1:
        return float(arr[0]), float("inf")
    return float(arr.mean()), float(1.96 * np.std(arr, ddof=1) / np.sqrt(arr.size))


# ----- sweeps -------------------------------------------------------------------


def scaling_sweep(base_spec: dict, axis: str, sizes, seeds) -> dict:
    """Run the spec at each size on the chosen axis; fit a log-log slope to means."""
    records = []
    means = []
    for size in sizes:
        cell = []
        for seed in seeds:
            spec = dict(base_spec)
            spec[axis] = int(size)
            spec["seed"] = int(seed)
            rec = run_experiment(spec)
            records.append(rec)
            cell.append(rec.sample_complexity)
        means.append(float(np.mean(cell)))
    slope, r_squared = loglog_slope(list(zip([float(s) for s in sizes], means)))
    return {
        "records": records,
        "sizes": [int(s) for s in sizes],
        "mean_complexities": means,
        "slope": slope,
        "r_squared": r_squared,
    }


def tradeoff_sweep(algorithm: str, generator: str, delta_grid, seeds, **spec_kwargs) -> dict:
    """Speedup/accuracy table over a delta grid.

    speedup = exact-counterpart complexity / algorithm complexity, per seed;
    accuracy = fraction of seeds whose answer matches the exact oracle.
    """
    if algorithm not in _ORACLES:
        raise UsageError(f"no exact counterpart registered for {algorithm!r}")
    if len(delta_grid) == 0 or len(seeds) == 0:
        raise UsageError("delta_grid and seeds must be non-empty")
    oracle_algorithm = _ORACLES[algorithm]
    records = []
    table = []
    for delta in delta_grid:
        speedups = []
        n_correct = 0
        for seed in seeds:
            spec = dict(spec_kwargs, algorithm=algorithm, generator=generator,
                        delta=float(delta), seed=int(seed), oracle_check=True)
            rec = run_experiment(spec)
            oracle_spec = dict(spec_kwargs, algorithm=oracle_algorithm, generator=generator,
                               seed=int(seed))
            oracle_rec = run_experiment(oracle_spec)
            records.append(rec)
            speedups.append(oracle_rec.sample_complexity / max(rec.sample_complexity, 1))
            n_correct += bool(rec.correct)
        table.append(
            {
                "delta": float(delta),
                "accuracy": n_correct / len(seeds),
                "median_speedup": float(np.median(speedups)),
                "mean_speedup": float(np.mean(speedups)),
            }
        )
    return {"records": records, "table": table}


# ----- persistence --------------------------------------------------------------


def _record_to_json(record: ExperimentRecord) -> dict:
    payload = asdict(record)
    return {key: payload[key] for key in CSV_COLUMNS}


def emit(records, path, format: str = "csv") -> Path:
    """Persist records with a stable column order and lossless numbers."""
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for record in records:
                row = _record_to_json(record)
                row["answer"] = json.dumps(row["answer"], sort_keys=True)
                writer.writerow([_csv_cell(row[col]) for col in CSV_COLUMNS])
    elif format == "json":
        payload = {
            "schema_version": SCHEMA_VERSION,
            "records": [_record_to_json(r) for r in records],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        raise UsageError(f"unknown format {format!r}; expected 'csv' or 'json'")
    return path


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cell_value(column: str, text: str):
    if text == "":
        return None
    if column in ("n", "d", "k", "seed", "sample_complexity"):
        return int(text)
    if column in ("delta", "wall_ms"):
        return float(text)
    if column == "correct":
        return text == "true"
    if column == "answer":
        return json.loads(text)
    return text


def load_records(path, format: str | None = None) -> list[ExperimentRecord]:
    path = Path(path)
    if format is None:
        format = "json" if path.suffix == ".json" else "csv"
    rows: list[dict] = []
    if format == "csv":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for raw in reader:
                rows.append({col: _cell_value(col, raw[col]) for col in CSV_COLUMNS})
    else:
        with open(path) as fh:
            payload = json.load(fh)
        rows = payload["records"]
    return [
        ExperimentRecord(
            algorithm=row["algorithm"],
            generator=row["generator"],
            n=row["n"],
            d=row["d"],
            k=row["k"],
            seed=row["seed"],
            delta=row["delta"],
            sample_complexity=row["sample_complexity"],
            wall_ms=row["wall_ms"],
            correct=row["correct"],
            answer=row["answer"],
            schema_version=row["schema_version"],
        )
        for row in rows
    ]


def records_schema() -> dict:
    """The JSON schema shipped with the package, as a dict."""
    schema_path = Path(__file__).parent / "schemas" / "records.schema.json"
    with open(schema_path) as fh:
        return json.load(fh)
