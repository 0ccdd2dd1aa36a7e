"""Command-line front end: ``resample``, ``train``, ``evaluate`` and ``bench``.

Exit codes: 0 success, 1 failure (or a benchmark with under 90% of its
cells succeeding), 2 usage error or unreadable input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import numpy as np

from .errors import QsmotePgmError
from .pipeline.benchmark import (
    ENCODINGS,
    MODELS,
    VARIANTS,
    BenchmarkConfig,
    make_model,
    prepare_training_fold,
    reproduce_paper_config,
    run_benchmark,
    variant_id,
    write_atomic,
)
from .pipeline.data import DATA_DIR_ENV, TELCO_FILENAME, TELCO_ROWS, Dataset, load_dataset
from .pipeline.metrics import compute_metrics, confusion_counts
from .qsmote import ResampleConfig, resample
from .serialization import load_model, predict_labels, save_model

log = logging.getLogger("qsmote_pgm")

BENCH_SUCCESS_THRESHOLD = 0.9
_FMT = argparse.ArgumentDefaultsHelpFormatter


class UsageError(Exception):
    """Bad invocation or unreadable input; exit code 2."""


def _encoding(value: str) -> str:
    aliases = {"amplitude": "amplitude", "amp": "amplitude", "stereo": "stereographic",
               "stereographic": "stereographic"}
    try:
        return aliases[value.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown encoding {value!r}") from None


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def _add_data_args(p):
    p.add_argument("--data", help=f"input CSV; defaults to ${DATA_DIR_ENV}/{TELCO_FILENAME}")
    p.add_argument("--label", default=None,
                   help="label column for non-Telco CSVs (Telco files are detected by schema)")
    p.add_argument("--rows", type=int, default=TELCO_ROWS,
                   help="keep the first ROWS Telco rows after cleaning")


def _add_resample_args(p, default_variant="qsmote", many=False):
    if many:
        p.add_argument("--variant", nargs="+", default=["qsmote", "knn", "fidelity", "margin"],
                       choices=VARIANTS + ("base",), help="variants to compare (default: all four)")
    else:
        p.add_argument("--variant", default=default_variant, choices=VARIANTS + ("base",),
                       help="QSMOTE variant")
    p.add_argument("--neighbors", type=_positive_int, default=5,
                   help="k for KNN-QSMOTE")
    p.add_argument("--clusters", type=_positive_int, default=3,
                   help="k-means clusters for Fidelity-QSMOTE")
    p.add_argument("--margin", type=float, default=0.1,
                   help="confidence margin for Margin-QSMOTE")
    p.add_argument("--margin-base", default="qsmote", choices=("qsmote", "base", "knn", "fidelity"),
                   help="generator filtered by Margin-QSMOTE")
    p.add_argument("--shots", type=_positive_int, default=1024,
                   help="simulated swap-test shots per lambda")
    p.add_argument("--lambda-policy", default="angle_shots", choices=("angle_shots", "uniform"),
                   help="how interpolation factors are drawn")
    p.add_argument("--step", type=float, default=1.0,
                   help="step factor for Fidelity-QSMOTE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsmote-pgm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resample", formatter_class=_FMT, help="balance a dataset and write CSV + provenance sidecar")
    _add_data_args(p)
    _add_resample_args(p)
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("train", formatter_class=_FMT, help="fit one model and save it")
    _add_data_args(p)
    _add_resample_args(p, default_variant="none")
    p.add_argument("--model", default="pgm", choices=MODELS, help="model kind")
    p.add_argument("--encoding", type=_encoding, default="stereographic",
                   help="amplitude or stereo")
    p.add_argument("--copies", type=_positive_int, default=2,
                   help="tensor copies n / kernel power m")
    p.add_argument("--rescale", type=float, default=1.0, help="feature scale before encoding")
    p.add_argument("--components", type=int, default=16,
                   help="PCA components, 0 disables PCA")
    p.add_argument("--precision", choices=("single", "double"), default="double",
                   help="floating-point precision of encoded states")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for resampling")
    p.add_argument("--out", required=True, help="model file (.npz)")

    p = sub.add_parser("evaluate", formatter_class=_FMT, help="score a saved model on a dataset")
    _add_data_args(p)
    p.add_argument("--model-file", required=True, help="file written by train")

    p = sub.add_parser("bench", formatter_class=_FMT, help="cross-validated benchmark grid")
    _add_data_args(p)
    _add_resample_args(p, many=True)
    p.add_argument("--model", nargs="+", default=["pgm", "kpgm"], choices=MODELS, help="models to compare")
    p.add_argument("--encoding", nargs="+", type=_encoding, default=list(ENCODINGS), help="encodings to compare")
    p.add_argument("--copies", nargs="+", type=_positive_int, default=[1, 2], help="copy counts n (kernel powers m) to compare")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--n-seeds", type=_positive_int, default=10,
                   help="repetitions with seeds seed..seed+n-1")
    p.add_argument("--folds", type=_positive_int, default=5, help="stratified CV folds")
    p.add_argument("--components", type=int, default=16,
                   help="PCA components, 0 disables PCA")
    p.add_argument("--rescale", type=float, default=1.0, help="feature scale before encoding")
    p.add_argument("--precision", choices=("single", "double"), default="double",
                   help="floating-point precision of encoded states")
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker processes")
    p.add_argument("--reproduce-paper", action="store_true",
                   help="PGM and kPGM x 4 QSMOTE variants x 2 encodings x copies 1,2")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _resolve_data(args) -> str:
    path = args.data
    if path is None:
        data_dir = os.environ.get(DATA_DIR_ENV)
        if not data_dir:
            raise UsageError(f"no --data given and ${DATA_DIR_ENV} is not set")
        path = os.path.join(data_dir, TELCO_FILENAME)
    if not os.path.isfile(path):
        raise UsageError(f"data file not found: {path}")
    return path


def _load(args) -> Dataset:
    return load_dataset(_resolve_data(args), label_column=args.label, n_rows=args.rows)


def _resample_config(args, variant: str = "qsmote") -> ResampleConfig:
    v = variant_id(variant)
    return ResampleConfig(
        variant="base" if v in ("qsmote", "none") else v,
        k_neighbors=args.neighbors, n_clusters=args.clusters, margin=args.margin,
        base_for_margin="base" if args.margin_base in ("qsmote", "base") else args.margin_base,
        shots=args.shots, lambda_policy=args.lambda_policy, step=args.step,
        seed=getattr(args, "seed", 0),
    )


def _check_binary(ds: Dataset, model_names):
    if "helstrom" in model_names and len(np.unique(ds.labels)) != 2:
        raise UsageError("the helstrom model requires binary labels")


def cmd_resample(args) -> int:
    ds = _load(args)
    if variant_id(args.variant) == "none":
        raise UsageError("resample needs a QSMOTE variant, not 'none'")
    cfg = _resample_config(args, args.variant)
    X, y, batch = resample(ds.features, ds.labels, cfg, np.random.default_rng(args.seed))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(ds.feature_names) + ["label", "synthetic"])
    n_orig = len(ds)
    for i, (row, lab) in enumerate(zip(X, y)):
        w.writerow([repr(float(v)) for v in row] + [int(lab), int(i >= n_orig)])
    root, _ = os.path.splitext(args.out)
    write_atomic(args.out, buf.getvalue())
    write_atomic(root + ".provenance.jsonl", batch.provenance_jsonl())
    counts = {int(k): int(v) for k, v in zip(*np.unique(y, return_counts=True))}
    summary = {"rows": len(y), "synthetic": len(batch), "class_counts": counts,
               "flags": sorted(batch.flags)}
    print(json.dumps(summary))
    return 0


def cmd_train(args) -> int:
    ds = _load(args)
    _check_binary(ds, [args.model])
    variant = variant_id(args.variant)
    config = BenchmarkConfig(models=(args.model,), variants=(variant,), encodings=(args.encoding,),
                             copies=(args.copies,), seeds=(args.seed,),
                             n_components=args.components or None,
                             resample=_resample_config(args, variant), rescale=args.rescale,
                             precision=args.precision)
    transform, X_fit, y_fit, flags = prepare_training_fold(ds.features, ds.labels, variant, config,
                                                           args.seed, 0)
    clf = make_model(args.model, args.encoding, args.copies, args.rescale, args.precision)
    clf.fit(X_fit, y_fit)
    fitted = {"pgm": lambda c: c.povm_, "kpgm": lambda c: c.model_,
              "helstrom": lambda c: c.predictor_, "logistic": lambda c: c}[args.model](clf)
    pre = transform.arrays()
    save_model(args.out, fitted, pre)
    print(json.dumps({"model": args.model, "train_rows": len(y_fit), "flags": list(flags),
                      "out": args.out}))
    return 0


def _apply_preprocess(pre: dict, X):
    X = np.asarray(X, dtype=np.float64)
    if "scaler_min" in pre:
        rng = pre["scaler_range"]
        X = np.where(rng > 0, (X - pre["scaler_min"]) / np.where(rng > 0, rng, 1.0), 0.0)
    if "pca_components" in pre:
        X = (X - pre["pca_mean"]) @ pre["pca_components"].T
    return X


def cmd_evaluate(args) -> int:
    ds = _load(args)
    if not os.path.isfile(args.model_file):
        raise UsageError(f"model file not found: {args.model_file}")
    model, pre = load_model(args.model_file)
    y_pred = predict_labels(model, _apply_preprocess(pre, ds.features))
    c = confusion_counts(ds.labels, y_pred, positive=1)
    m = compute_metrics(c)
    m["flags"] = list(m["flags"])
    print(json.dumps({**m, "tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn}))
    return 0


def bench_config(args) -> BenchmarkConfig:
    seeds = tuple(range(args.seed, args.seed + args.n_seeds))
    common = dict(seeds=seeds, n_splits=args.folds, n_components=args.components or None,
                  resample=_resample_config(args), rescale=args.rescale,
                  precision=args.precision, jobs=args.jobs)
    if args.reproduce_paper:
        return reproduce_paper_config(**common)
    variants = tuple(args.variant)
    return BenchmarkConfig(models=tuple(args.model), variants=variants,
                           encodings=tuple(args.encoding), copies=tuple(args.copies), **common)


def cmd_bench(args) -> int:
    ds = _load(args)
    config = bench_config(args)
    _check_binary(ds, config.models)
    report = run_benchmark(ds, config)
    os.makedirs(args.out, exist_ok=True)
    write_atomic(os.path.join(args.out, "results.csv"), report.results_csv())
    write_atomic(os.path.join(args.out, "summary.md"), report.markdown())
    print(report.markdown())
    n_cells = len(report.records)
    if report.failed:
        print(f"{len(report.failed)} of {n_cells} cells failed:", file=sys.stderr)
        for r in report.failed:
            print(f"  {r.config} seed={r.seed} fold={r.fold}: {r.error}", file=sys.stderr)
    return 0 if report.success_fraction >= BENCH_SUCCESS_THRESHOLD else 1


COMMANDS = {"resample": cmd_resample, "train": cmd_train, "evaluate": cmd_evaluate,
            "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qsmote-pgm {args.command}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"qsmote-pgm {args.command}: {exc}", file=sys.stderr)
        return 2
    except (QsmotePgmError, ValueError) as exc:
        print(f"qsmote-pgm {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
