"""Command-line interface: train, predict, bench."""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .bench import BUILTIN_METHODS, render_text, report_to_json, run_bench, spec
from .dataset import DEFAULT_NA_TOKENS, DataError, load_csv, load_csv_with_schema
from .tree import (
    GrowthConfig,
    ModelFormatError,
    load_model,
    predict_tree,
    save_model,
    train,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4


def _na_tokens(args) -> frozenset[str]:
    if args.na_token:
        return frozenset(args.na_token)
    return DEFAULT_NA_TOKENS


def _cmd_train(args) -> int:
    ds = load_csv(args.data, args.target, _na_tokens(args))
    config = GrowthConfig(
        method=args.method,
        stopping="cv_prune" if args.stopping == "cv" else "prestop",
        prestop_p=args.prestop_p,
        growth_p=args.growth_p,
        forward_alpha=args.alpha,
        imputation="root_node" if args.imputation == "root" else "node_wise",
        max_depth=args.max_depth,
        cv_folds=args.folds,
        seed=args.seed,
    )
    model = train(ds, config)
    save_model(model, args.out)

    accepted_p = [
        node.diagnostics.p_value
        for node in model.internal_nodes()
        if node.diagnostics.p_value is not None
    ]
    print(f"model written to {args.out}")
    print(f"leaves: {model.leaf_count()}  depth: {model.depth()}")
    print(f"training accuracy: {model.training_accuracy:.4f}")
    if accepted_p:
        arr = np.array(accepted_p)
        print(
            f"split p-values: min={arr.min():.3g} "
            f"median={np.median(arr):.3g} max={arr.max():.3g} (n={arr.size})"
        )
    else:
        print("split p-values: none (single-leaf tree)")
    if model.pruning is not None:
        print(
            f"pruning: kept {model.pruning.chosen_leaf_count} leaves "
            f"at threshold {model.pruning.chosen_threshold:.3g}"
        )
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    columns, n_rows = load_csv_with_schema(args.data, model.schema, _na_tokens(args))
    labels = predict_tree(model, columns)
    probs = predict_tree(model, columns, output="posteriors") if args.probs else None

    with open(args.out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        header = ["predicted"]
        if probs is not None:
            header += [f"prob_{label}" for label in model.class_labels]
        writer.writerow(header)
        for i in range(n_rows):
            row = [model.class_labels[labels[i]]]
            if probs is not None:
                row += [repr(float(p)) for p in probs[i]]
            writer.writerow(row)
    print(f"predictions for {n_rows} rows written to {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.cv is not None:
        protocol = ("cv", args.cv)
    else:
        protocol = ("holdout", args.holdout)
    config = GrowthConfig(
        stopping="cv_prune" if args.stopping == "cv" else "prestop",
        imputation="node_wise",
        cv_folds=args.folds,
        seed=args.seed,
    )
    params = {}
    if args.size is not None:
        size_key = {
            "chessboard3x3": "per_square",
            "rotated_chessboard": "per_square",
            "chessboard_noise": "per_square",
            "xor6d": "per_center",
            "dominant_class": "n_dominant",
            "split_strength_demo": "extra_noise",
        }.get(args.spec, "per_square")
        params[size_key] = args.size
    if args.noise_dims is not None:
        params["noise_dims"] = args.noise_dims
    report = run_bench(
        spec(args.spec, args.seed, **params),
        methods,
        protocol=protocol,
        seed=args.seed,
        config=config,
    )
    if args.format == "json":
        print(json.dumps(report_to_json(report), indent=1))
    else:
        print(render_text(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foldtree",
        description="Oblique decision trees with multi-way discriminant splits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model from a CSV file")
    p_train.add_argument("--data", required=True, help="training CSV path")
    p_train.add_argument("--target", required=True, help="target column name")
    p_train.add_argument("--method", choices=["ldatree", "foldtree"], default="ldatree")
    p_train.add_argument(
        "--stopping", choices=["prestop", "cv"], default="cv",
        help="prestop: significance pre-stopping; cv: grow loose then CV-prune",
    )
    p_train.add_argument("--prestop-p", type=float, default=0.01)
    p_train.add_argument("--growth-p", type=float, default=0.6)
    p_train.add_argument("--alpha", type=float, default=0.05, help="forward selection level")
    p_train.add_argument("--imputation", choices=["node", "root"], default="node")
    p_train.add_argument("--max-depth", type=int, default=30)
    p_train.add_argument("--folds", type=int, default=10)
    p_train.add_argument("--seed", type=int, required=True)
    p_train.add_argument("--na-token", action="append", help="repeatable; default: '', NA, ?")
    p_train.add_argument("--out", required=True, help="output model JSON path")
    p_train.set_defaults(func=_cmd_train)

    p_pred = sub.add_parser("predict", help="predict a CSV with a saved model")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--out", required=True)
    p_pred.add_argument("--probs", action="store_true", help="emit per-class posteriors")
    p_pred.add_argument("--na-token", action="append")
    p_pred.set_defaults(func=_cmd_predict)

    p_bench = sub.add_parser("bench", help="run a synthetic benchmark")
    p_bench.add_argument("spec", help=f"one of: chessboard3x3, rotated_chessboard, "
                                      f"chessboard_noise, xor6d, dominant_class, split_strength_demo")
    p_bench.add_argument("--methods", default="ldatree,foldtree,plurality,axis_gini",
                         help=f"comma list from: {', '.join(BUILTIN_METHODS)}")
    group = p_bench.add_mutually_exclusive_group()
    group.add_argument("--holdout", type=float, default=0.5, help="train fraction")
    group.add_argument("--cv", type=int, help="cross-validation folds for evaluation")
    p_bench.add_argument("--stopping", choices=["prestop", "cv"], default="cv")
    p_bench.add_argument("--folds", type=int, default=10, help="pruning folds")
    p_bench.add_argument("--seed", type=int, required=True)
    p_bench.add_argument("--size", type=int, help="override the spec's size parameter")
    p_bench.add_argument("--noise-dims", type=int, help="override noise column count")
    p_bench.add_argument("--format", choices=["text", "json"], default="text")
    p_bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
