"""Cross-validated benchmark: resample, reduce, fit, score, aggregate.

Every (seed, fold) unit rescales, resamples and projects using training-fold
rows only.  Units are independent, so they can run in worker processes.
Each resampling step draws from its own stream seeded by
``(seed, fold, variant)``, so results do not depend on execution order.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..encodings import EncodingConfig
from ..kpgm import KPGMClassifier
from ..logistic import LogisticRegression
from ..pgm import HelstromClassifier, PGMClassifier
from ..qsmote import ResampleConfig, UNDERFILLED, generate
from .cv import stratified_kfold, train_test_pairs
from .data import Dataset, MinMaxScaler
from .metrics import METRICS, MetricRecord, compute_metrics, confusion_counts
from .pca import pca_fit

log = logging.getLogger(__name__)

MODELS = ("pgm", "kpgm", "helstrom", "logistic")
VARIANTS = ("none", "qsmote", "knn", "fidelity", "margin")
VARIANT_CODES = {v: i for i, v in enumerate(VARIANTS)}
VARIANT_LABELS = {"none": "None", "qsmote": "QSMOTE", "knn": "KNN-QSMOTE",
                  "fidelity": "Fidelity-QSMOTE", "margin": "Margin-QSMOTE"}
_RESAMPLE_VARIANT = {"qsmote": "base", "knn": "knn", "fidelity": "fidelity", "margin": "margin"}
ENCODINGS = ("amplitude", "stereographic")

RESULT_COLUMNS = ("model", "variant", "encoding", "n_copies", "seed", "fold",
                  "accuracy", "precision", "recall", "f1", "flags")

REPORT_NOTES = (
    "Min-max scaling is refit on each training fold.",
    "PCA is fit on the resampled training fold and applied before every model.",
    "Resampling touches training folds only; evaluation folds are never resampled.",
    "The classical reference is logistic regression, not a random forest.",
    "Swap-test shots are modeled by binomial sampling of exact fidelities.",
)


def variant_id(name: str) -> str:
    name = name.lower()
    if name == "base":
        return "qsmote"
    if name not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; choose from {', '.join(VARIANTS)}")
    return name


@dataclass(frozen=True)
class BenchmarkConfig:
    models: tuple = ("pgm", "kpgm")
    variants: tuple = ("qsmote", "knn", "fidelity", "margin")
    encodings: tuple = ENCODINGS
    copies: tuple = (1, 2)
    seeds: tuple = tuple(range(10))
    n_splits: int = 5
    n_components: int | None = 16
    resample: ResampleConfig = field(default_factory=ResampleConfig)
    rescale: float = 1.0
    precision: str = "double"
    jobs: int = 1

    def __post_init__(self):
        for m in self.models:
            if m not in MODELS:
                raise ValueError(f"unknown model {m!r}; choose from {', '.join(MODELS)}")
        object.__setattr__(self, "variants", tuple(variant_id(v) for v in self.variants))
        object.__setattr__(self, "encodings",
                           tuple(EncodingConfig(e).method for e in self.encodings))
        if any(int(c) < 1 for c in self.copies):
            raise ValueError("n_copies must be >= 1")

    def configurations(self) -> list:
        """``(model, variant, encoding, n_copies)`` cells in report order.

        Logistic regression ignores the encoding grid and appears once per
        variant with encoding ``none`` and ``n_copies`` 0.
        """
        out = []
        for model in self.models:
            for variant in self.variants:
                if model == "logistic":
                    out.append((model, variant, "none", 0))
                    continue
                for enc in self.encodings:
                    for n in self.copies:
                        out.append((model, variant, enc, int(n)))
        return out


def reproduce_paper_config(**overrides) -> BenchmarkConfig:
    """PGM and kPGM over all four QSMOTE variants, both encodings, 1 and 2 copies."""
    return replace(BenchmarkConfig(), **overrides)


def make_model(model: str, encoding: str, n_copies: int, rescale: float = 1.0,
               precision: str = "double"):
    if model == "logistic":
        return LogisticRegression()
    enc = EncodingConfig(encoding, rescale, precision)
    if model == "pgm":
        return PGMClassifier(enc, n_copies)
    if model == "kpgm":
        return KPGMClassifier(enc, n_copies)
    if model == "helstrom":
        return HelstromClassifier(enc, n_copies)
    raise ValueError(f"unknown model {model!r}")


def resample_rng(seed: int, fold: int, variant: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, fold, VARIANT_CODES[variant]]))


@dataclass(frozen=True)
class FittedPreprocess:
    """Scaler and optional PCA fitted on one training fold."""

    scaler: MinMaxScaler
    pca: object = None

    def __call__(self, X):
        Z = self.scaler.transform(X)
        return Z if self.pca is None else self.pca.transform(Z)

    def arrays(self) -> dict:
        out = {"scaler_min": self.scaler.min_, "scaler_range": self.scaler.range_}
        if self.pca is not None:
            out.update(pca_mean=self.pca.mean, pca_components=self.pca.components)
        return out


def prepare_training_fold(X_train, y_train, variant: str, config: BenchmarkConfig, seed: int,
                          fold: int):
    """Everything fitted from training rows: scaler, resampled set, PCA.

    Returns ``(transform, X_fit, y_fit, flags)`` where ``transform`` (a
    ``FittedPreprocess``) maps raw rows into the model's input space.
    """
    scaler = MinMaxScaler().fit(X_train)
    Xs = scaler.transform(X_train)
    flags = ()
    if variant == "none":
        X_fit, y_fit = Xs, np.asarray(y_train)
    else:
        rcfg = replace(config.resample, variant=_RESAMPLE_VARIANT[variant], seed=seed)
        batch = generate(Xs, y_train, rcfg, resample_rng(seed, fold, variant))
        X_fit = np.vstack([Xs, batch.samples])
        y_fit = np.concatenate([y_train, np.full(len(batch), batch.label, dtype=np.asarray(y_train).dtype)])
        if UNDERFILLED in batch.flags:
            flags = (UNDERFILLED,)
    if config.n_components is None:
        return FittedPreprocess(scaler), X_fit, y_fit, flags
    pca = pca_fit(X_fit, config.n_components)
    return FittedPreprocess(scaler, pca), pca.transform(X_fit), y_fit, flags


def run_unit(X, y, train_idx, test_idx, seed: int, fold: int, config: BenchmarkConfig) -> list:
    """All configurations for one (seed, fold); failures become error records."""
    X_train, y_train = X[train_idx], y[train_idx]
    X_test, y_test = X[test_idx], y[test_idx]
    records = []
    by_variant = {}
    for cfg in config.configurations():
        by_variant.setdefault(cfg[1], []).append(cfg)
    for variant, cells in by_variant.items():
        try:
            transform, X_fit, y_fit, flags = prepare_training_fold(
                X_train, y_train, variant, config, seed, fold)
            Z_test = transform(X_test)
        except Exception as exc:  # noqa: BLE001 - a failed stage fails its cells, not the run
            log.warning("seed %d fold %d variant %s: resampling failed: %s", seed, fold, variant, exc)
            for model, var, enc, n in cells:
                records.append(MetricRecord(model, var, enc, n, seed, fold, error=f"{type(exc).__name__}: {exc}"))
            continue
        for model, var, enc, n in cells:
            rec = MetricRecord(model, var, enc, n, seed, fold)
            try:
                clf = make_model(model, enc, n, config.rescale, config.precision).fit(X_fit, y_fit)
                y_pred = clf.predict(Z_test)
                m = compute_metrics(confusion_counts(y_test, y_pred, positive=1))
                rec.accuracy, rec.precision, rec.recall, rec.f1 = (m[k] for k in METRICS)
                rec.flags = flags + m["flags"]
            except Exception as exc:  # noqa: BLE001
                log.warning("seed %d fold %d %s: %s", seed, fold, (model, var, enc, n), exc)
                rec.error = f"{type(exc).__name__}: {exc}"
            records.append(rec)
    return records


def _run_unit_single_threaded(args):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return run_unit(*args)
    with threadpool_limits(1):
        return run_unit(*args)


@dataclass
class BenchmarkReport:
    records: list
    config: BenchmarkConfig
    notes: tuple = REPORT_NOTES
    elapsed: float = 0.0

    @property
    def failed(self) -> list:
        return [r for r in self.records if r.failed]

    @property
    def success_fraction(self) -> float:
        return 1.0 - len(self.failed) / len(self.records) if self.records else 0.0

    def aggregates(self, by: str = "fold") -> dict:
        """``{config: {metric: (mean, std, n)}}`` with sample (n-1) std.

        ``by="fold"`` pools every (seed, fold) record; ``by="seed"`` first
        averages folds within a seed and then aggregates the per-seed means.
        """
        if by not in ("fold", "seed"):
            raise ValueError("by must be 'fold' or 'seed'")
        groups = {}
        for r in self.records:
            if not r.failed:
                groups.setdefault(r.config, []).append(r)
        order = {c: i for i, c in enumerate(self.config.configurations())}
        out = {}
        for cfg in sorted(groups, key=lambda c: order.get(c, len(order))):
            recs = groups[cfg]
            out[cfg] = {}
            for metric in METRICS:
                if by == "fold":
                    values = np.array([getattr(r, metric) for r in recs])
                else:
                    per_seed = {}
                    for r in recs:
                        per_seed.setdefault(r.seed, []).append(getattr(r, metric))
                    values = np.array([np.mean(v) for _, v in sorted(per_seed.items())])
                std = float(np.std(values, ddof=1)) if len(values) > 1 else float("nan")
                out[cfg][metric] = (float(np.mean(values)), std, len(values))
        return out

    def results_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for r in self.records:
            flags = list(r.flags)
            if r.error:
                flags.append("error=" + r.error.replace("\n", " "))
            writer.writerow([r.model, r.variant, r.encoding, r.n_copies, r.seed, r.fold,
                             repr(r.accuracy), repr(r.precision), repr(r.recall), repr(r.f1),
                             ";".join(flags)])
        return buf.getvalue()

    def markdown(self) -> str:
        lines = ["# Benchmark summary", ""]
        lines += [f"- {n}" for n in self.notes]
        c = self.config
        lines += [f"- Seeds: {list(c.seeds)}; {c.n_splits}-fold stratified CV; "
                  f"PCA components: {c.n_components}.", ""]
        for by, title in (("fold", "Aggregated over all folds and seeds"),
                          ("seed", "Aggregated over per-seed fold means")):
            lines += [f"## {title}", "",
                      "| Model | Variant | Encoding | n_copies | Accuracy | Precision | Recall | F1 Score |",
                      "|---|---|---|---|---|---|---|---|"]
            for (model, variant, enc, n), stats in self.aggregates(by).items():
                cells = [f"{stats[m][0]:.4f} ± {stats[m][1]:.4f}" for m in METRICS]
                lines.append(f"| {model.upper() if model != 'logistic' else 'Logistic'} | "
                             f"{VARIANT_LABELS[variant]} | {enc} | {n if n else '-'} | "
                             + " | ".join(cells) + " |")
            lines.append("")
        if self.failed:
            lines += ["## Failed cells", ""]
            lines += [f"- {r.config} seed {r.seed} fold {r.fold}: {r.error}" for r in self.failed]
            lines.append("")
        return "\n".join(lines)


def run_benchmark(dataset: Dataset, config: BenchmarkConfig) -> BenchmarkReport:
    start = time.perf_counter()
    X = np.asarray(dataset.features, dtype=np.float64)
    y = np.asarray(dataset.labels)
    units = []
    for seed in config.seeds:
        folds = stratified_kfold(y, config.n_splits, seed)
        for fold, (train, test) in enumerate(train_test_pairs(folds)):
            units.append((X, y, train, test, int(seed), fold, config))
    jobs = max(1, int(config.jobs or 1))
    if jobs == 1 or len(units) == 1:
        results = [run_unit(*u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_unit_single_threaded, units))
    records = [r for unit in results for r in unit]
    report = BenchmarkReport(records, config, elapsed=time.perf_counter() - start)
    log.info("benchmark finished: %d records, %d failed, %.1fs", len(records),
             len(report.failed), report.elapsed)
    return report


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
