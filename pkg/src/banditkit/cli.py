"""Command-line harness for the adaptive-sampling algorithms.

Subcommands: kmedoids, forest, mips, mp, gen, bench scaling, bench tradeoff.
Exit codes: 0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from banditkit import data as datagen
from banditkit.bench import (
    ExperimentRecord,
    UsageError,
    emit,
    run_experiment,
    scaling_sweep,
    tradeoff_sweep,
)
from banditkit.mips.pursuit import SOLVERS, matching_pursuit

DEFAULT_SEED = 0
DEFAULT_FORMAT = "csv"


def _add_common(parser: argparse.ArgumentParser, *, data_source: bool = True) -> None:
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--delta", type=float, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--out", type=str, default=None, help="write records to this path")
    parser.add_argument("--format", choices=("csv", "json"), default=DEFAULT_FORMAT)
    if data_source:
        parser.add_argument("--generator", type=str, default=None)
        parser.add_argument("--input", type=str, default=None, help="CSV file instead of a generator")
        parser.add_argument("--oracle-check", action="store_true")


def _base_spec(args, algorithm: str) -> dict:
    spec = {"algorithm": algorithm, "seed": args.seed}
    if args.delta is not None:
        spec["delta"] = args.delta
    if args.batch_size is not None:
        spec["batch_size"] = args.batch_size
    if getattr(args, "oracle_check", False):
        spec["oracle_check"] = True
    return spec


def _finish(args, record: ExperimentRecord) -> int:
    payload = {
        "algorithm": record.algorithm,
        "sample_complexity": record.sample_complexity,
        "correct": record.correct,
        "answer": record.answer,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out:
        emit([record], args.out, args.format)
    return 0


# ----- subcommand handlers ------------------------------------------------------


def _cmd_kmedoids(args) -> int:
    spec = _base_spec(args, args.algorithm)
    spec["k"] = args.k
    if args.input:
        spec["problem"] = {"points": datagen.load_matrix_csv(args.input)}
        spec["n"] = spec["problem"]["points"].shape[0]
    else:
        spec["generator"] = args.generator or "gaussian_blobs"
        spec["n"] = args.n
    return _finish(args, run_experiment(spec))


def _cmd_forest(args) -> int:
    spec = _base_spec(args, "fit_forest")
    spec.update(variant=args.variant, splitter=args.splitter, n_trees=args.n_trees, metric=args.metric)
    if args.budget is not None:
        spec["budget"] = args.budget
    if args.max_depth is not None:
        spec["max_depth"] = args.max_depth
    if args.input:
        X, y = datagen.load_matrix_csv(args.input, has_labels=True)
        if args.metric in ("gini", "entropy"):
            y = y.astype(np.int64)
        spec["problem"] = {"X": X, "y": y}
        spec["n"] = X.shape[0]
    else:
        spec["generator"] = args.generator or (
            "classification_node" if args.metric in ("gini", "entropy") else "linear_regression"
        )
        spec["n"] = args.n
        spec["d"] = args.m
    return _finish(args, run_experiment(spec))


def _cmd_mips(args) -> int:
    spec = _base_spec(args, args.algorithm)
    if args.top_k is not None:
        spec["top_k"] = args.top_k
    if args.bucket_size is not None:
        spec["bucket_size"] = args.bucket_size
    if args.input:
        mat = datagen.load_matrix_csv(args.input)
        if mat.shape[0] < 2:
            raise UsageError("MIPS input needs a query row plus at least one atom row")
        spec["problem"] = {"query": mat[0], "atoms": mat[1:]}
        spec["n"] = mat.shape[0] - 1
        spec["d"] = mat.shape[1]
    else:
        spec["generator"] = args.generator or "normal_custom"
        spec["n"] = args.n
        spec["d"] = args.d
    return _finish(args, run_experiment(spec))


def _cmd_mp(args) -> int:
    if args.full_rate:
        signal, dictionary = datagen.gen_simple_song(args.t)
    else:
        signal, dictionary = datagen.gen_simple_song_reduced(args.t)
    components = matching_pursuit(
        signal, dictionary.atoms, args.components, solver=args.solver,
        delta=args.delta if args.delta is not None else 0.001,
    )
    payload = {
        "components": [
            {"atom": i, "name": dictionary.names[i], "coefficient": c} for i, c in components
        ]
    }
    print(json.dumps(payload, indent=2))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return 0


def _cmd_gen(args) -> int:
    if not args.out:
        raise UsageError("gen requires --out")
    name = args.generator
    seed = args.seed
    if name == "normal_custom":
        mat = datagen.gen_normal_custom(args.n, args.d, seed)
    elif name == "correlated_normal_custom":
        query, atoms = datagen.gen_correlated_normal_custom(args.n, args.d, seed)
        mat = np.vstack([query, atoms])
    elif name == "symmetric_normal":
        query, atoms = datagen.gen_symmetric_normal(args.n, args.d, seed)
        mat = np.vstack([query, atoms])
    elif name == "gaussian_blobs":
        points, labels = datagen.gen_gaussian_blobs(args.n, args.k, seed)
        mat = np.column_stack([points, labels])
    elif name == "classification_node":
        X, y = datagen.gen_classification_node(args.n, args.m, seed)
        mat = np.column_stack([X, y])
    elif name == "linear_regression":
        X, y = datagen.gen_linear_regression(args.n, args.m, seed)
        mat = np.column_stack([X, y])
    elif name == "simple_song":
        signal, _ = datagen.gen_simple_song_reduced(args.t)
        mat = signal[:, None]
    else:
        raise UsageError(f"unknown generator {name!r}")
    datagen.save_matrix_csv(args.out, mat)
    print(json.dumps({"generator": name, "shape": list(mat.shape), "out": args.out}))
    return 0


def _cmd_bench_scaling(args) -> int:
    spec = _base_spec(args, args.algorithm)
    spec["generator"] = args.generator
    if args.n is not None:
        spec["n"] = args.n
    if args.d is not None:
        spec["d"] = args.d
    if args.k is not None:
        spec["k"] = args.k
    sizes = [int(s) for s in args.sizes.split(",")]
    result = scaling_sweep(spec, args.axis, sizes, range(args.seeds))
    print(
        json.dumps(
            {
                "axis": args.axis,
                "sizes": result["sizes"],
                "mean_complexities": result["mean_complexities"],
                "slope": result["slope"],
                "r_squared": result["r_squared"],
            },
            indent=2,
        )
    )
    if args.out:
        emit(result["records"], args.out, args.format)
    return 0


def _cmd_bench_tradeoff(args) -> int:
    deltas = [float(s) for s in args.deltas.split(",")]
    kwargs = {}
    if args.n is not None:
        kwargs["n"] = args.n
    if args.d is not None:
        kwargs["d"] = args.d
    if args.k is not None:
        kwargs["k"] = args.k
    if args.batch_size is not None:
        kwargs["batch_size"] = args.batch_size
    result = tradeoff_sweep(args.algorithm, args.generator, deltas, range(args.seeds), **kwargs)
    print(json.dumps({"table": result["table"]}, indent=2))
    if args.out:
        emit(result["records"], args.out, args.format)
    return 0


# ----- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="banditkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kmedoids", help="cluster points with exact PAM or the adaptive solver")
    _add_common(p)
    p.add_argument("--algorithm", choices=("banditpam", "pam_exact", "pam_build_exact"), default="banditpam")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=_cmd_kmedoids)

    p = sub.add_parser("forest", help="train a tree ensemble")
    _add_common(p)
    p.add_argument("--variant", choices=("rf", "extra_trees", "random_patches"), default="rf")
    p.add_argument("--splitter", choices=("exact", "mabsplit"), default="exact")
    p.add_argument("--metric", choices=("gini", "entropy", "mse"), default="gini")
    p.add_argument("--n-trees", type=int, default=10)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.set_defaults(func=_cmd_forest)

    p = sub.add_parser("mips", help="maximum inner product search")
    _add_common(p)
    p.add_argument(
        "--algorithm",
        choices=("naive_mips", "banditmips", "banditmips_alpha", "topk_mips", "bucket_ae"),
        default="banditmips",
    )
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--d", type=int, default=10_000)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--bucket-size", type=int, default=None)
    p.set_defaults(func=_cmd_mips)

    p = sub.add_parser("mp", help="matching pursuit on the synthetic song")
    _add_common(p, data_source=False)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--components", type=int, default=5)
    p.add_argument("--solver", choices=tuple(sorted(SOLVERS)), default="naive")
    p.add_argument("--full-rate", action="store_true", help="44.1 kHz instead of the reduced mode")
    p.set_defaults(func=_cmd_mp)

    p = sub.add_parser("gen", help="write a generated dataset to CSV")
    _add_common(p, data_source=False)
    p.add_argument("--generator", type=str, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--t", type=int, default=1)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("bench", help="sweeps: scaling slopes and delta tradeoffs")
    bench_sub = p.add_subparsers(dest="bench_command", required=True)

    b = bench_sub.add_parser("scaling", help="sample complexity vs problem size")
    _add_common(b)
    b.add_argument("--algorithm", type=str, required=True)
    b.add_argument("--axis", choices=("n", "d"), default="n")
    b.add_argument("--sizes", type=str, required=True, help="comma-separated sizes")
    b.add_argument("--seeds", type=int, default=3)
    b.add_argument("--n", type=int, default=None)
    b.add_argument("--d", type=int, default=None)
    b.add_argument("--k", type=int, default=None)
    b.set_defaults(func=_cmd_bench_scaling)

    b = bench_sub.add_parser("tradeoff", help="speedup/accuracy over a delta grid")
    _add_common(b)
    b.add_argument("--algorithm", type=str, required=True)
    b.add_argument("--deltas", type=str, required=True, help="comma-separated deltas")
    b.add_argument("--seeds", type=int, default=10)
    b.add_argument("--n", type=int, default=None)
    b.add_argument("--d", type=int, default=None)
    b.add_argument("--k", type=int, default=None)
    b.set_defaults(func=_cmd_bench_tradeoff)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:  # pragma: no cover - shell plumbing
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
