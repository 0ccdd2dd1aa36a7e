import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qsmote_pgm.pipeline.benchmark as bench
from qsmote_pgm.errors import DimensionError, ParseError, SchemaError, StratifyError
from qsmote_pgm.pipeline.benchmark import (
    BenchmarkConfig,
    BenchmarkReport,
    prepare_training_fold,
    reproduce_paper_config,
    run_benchmark,
    run_unit,
)
from qsmote_pgm.pipeline.cv import stratified_kfold, train_test_pairs
from qsmote_pgm.pipeline.data import (
    Dataset,
    MinMaxScaler,
    find_telco_csv,
    load_csv,
    load_dataset,
    one_hot,
    preprocess_telco,
)
from qsmote_pgm.pipeline.metrics import ConfusionCounts, MetricRecord, compute_metrics, confusion_counts
from qsmote_pgm.pipeline.pca import pca_fit

from telco_fixture import EXPECTED_FEATURES, write_telco_csv


@pytest.fixture
def telco_path(tmp_path):
    path = tmp_path / "telco.csv"
    write_telco_csv(path, n=1100, seed=3, n_blank_total=11)
    return path


def small_dataset(seed=0, n=120, d=6):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.3).astype(int)
    X = rng.random((n, d)) + 0.4 * y[:, None]
    return Dataset(X, y, [f"f{i}" for i in range(d)], {"source": "synthetic"})


# --- CSV ingestion -------------------------------------------------------------

def test_load_csv_types_and_order(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text('name,score,note\nann,1.5,"hello, world"\nbob,2,plain\nc,3,x\n')
    t = load_csv(p)
    assert t.columns == ["name", "score", "note"]
    assert t.kind("score") == "numeric" and t.kind("name") == "string"
    np.testing.assert_array_equal(t.data["score"], [1.5, 2.0, 3.0])
    assert t.data["note"][0] == "hello, world"


def test_load_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ParseError):
        load_csv(empty)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("a,b\n1,2\n3\n")
    with pytest.raises(ParseError, match="row 3"):
        load_csv(ragged)
    headless = tmp_path / "headless.csv"
    headless.write_text("1,2\n3,4\n")
    with pytest.raises(ParseError, match="header"):
        load_csv(headless)
    dup = tmp_path / "dup.csv"
    dup.write_text("a,a\n1,2\n")
    with pytest.raises(ParseError, match="duplicate"):
        load_csv(dup)
    with pytest.raises(FileNotFoundError, match="missing.csv"):
        load_csv(tmp_path / "missing.csv")


def test_schema_hints(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("a,b\n1, \n2,3\n")
    t = load_csv(p, {"b": "numeric", "a": "string"})
    assert t.kind("a") == "string"
    assert math.isnan(t.data["b"][0]) and t.data["b"][1] == 3.0


def test_telco_shape_of_raw_file(telco_path):
    t = load_csv(telco_path)
    assert t.n_rows == 1100 and len(t.columns) == 21


def test_preprocess_telco(telco_path):
    ds = load_dataset(telco_path)
    assert ds.features.shape == (1000, EXPECTED_FEATURES)
    assert ds.provenance["rows_after_nan_drop"] == 1100 - 11
    assert np.all((ds.features >= 0) & (ds.features <= 1))
    assert not np.any(np.isnan(ds.features))
    assert set(np.unique(ds.labels)) <= {0, 1}
    assert "customerID" not in " ".join(ds.feature_names)
    assert "Contract_Month-to-month" in ds.feature_names


def test_truncation_follows_nan_drop(tmp_path):
    path = tmp_path / "t.csv"
    rows = write_telco_csv(path, n=40, seed=1, n_blank_total=4)
    kept = [r for r in rows if r["TotalCharges"].strip()]
    ds = load_dataset(path, n_rows=10)
    expected = np.array([r["Churn"] == "Yes" for r in kept[:10]], dtype=int)
    np.testing.assert_array_equal(ds.labels, expected)


def test_telco_schema_checks(tmp_path):
    path = tmp_path / "t.csv"
    write_telco_csv(path, n=20)
    raw = load_csv(path, {"TotalCharges": "string"})
    del raw.data["Contract"]
    with pytest.raises(SchemaError):
        preprocess_telco(raw)


def test_generic_dataset(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("x1,x2,label\n0.1,0.2,0\n0.3,0.4,1\n")
    ds = load_dataset(p)
    assert ds.features.shape == (2, 2)
    np.testing.assert_array_equal(ds.labels, [0, 1])
    with pytest.raises(SchemaError):
        load_dataset(p, label_column="y")


def test_find_telco_csv(tmp_path, monkeypatch):
    monkeypatch.delenv("QSMOTE_DATA_DIR", raising=False)
    assert find_telco_csv() is None
    target = tmp_path / "WA_Fn-UseC_-Telco-Customer-Churn.csv"
    target.write_text("x")
    monkeypatch.setenv("QSMOTE_DATA_DIR", str(tmp_path))
    assert find_telco_csv() == str(target)


def test_one_hot_lexicographic(tmp_path):
    p = tmp_path / "o.csv"
    p.write_text("c,n\nzeta,1\nalpha,2\nmid,3\n")
    M, names = one_hot(load_csv(p), ["c", "n"])
    assert names == ["c_alpha", "c_mid", "c_zeta", "n"]
    np.testing.assert_array_equal(M[:, :3], [[0, 0, 1], [1, 0, 0], [0, 1, 0]])


def test_minmax_scaler_constant_column():
    X = np.array([[1.0, 5.0], [3.0, 5.0]])
    np.testing.assert_array_equal(MinMaxScaler().fit_transform(X), [[0, 0], [1, 0]])


# --- PCA ------------------------------------------------------------------------

def test_pca_full_rank_reconstruction():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 2))
    p = pca_fit(X, 2)
    np.testing.assert_allclose(p.inverse_transform(p.transform(X)), X, atol=1e-12)


def test_pca_rank_one():
    X = np.outer(np.arange(10.0), [1.0, 2.0, -1.0])
    p = pca_fit(X, 1)
    assert p.explained_variance_ratio[0] == pytest.approx(1.0)


def test_pca_against_svd_oracle():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 20))
    p = pca_fit(X, 8)
    # oracle: right singular vectors of the centered data
    _, s, Vt = np.linalg.svd(X - X.mean(axis=0), full_matrices=False)
    for k in range(8):
        assert min(np.abs(p.components[k] - Vt[k]).max(), np.abs(p.components[k] + Vt[k]).max()) < 1e-8
    np.testing.assert_allclose(p.explained_variance, s[:8] ** 2 / 49, rtol=1e-10)
    with pytest.raises(DimensionError):
        pca_fit(X, 21)


# --- folds ----------------------------------------------------------------------

def test_folds_exact_divisibility():
    y = np.array([0] * 5 + [1] * 5)
    for f in stratified_kfold(y, 5, seed=3):
        assert sorted(y[f].tolist()) == [0, 1]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(20, 300), st.integers(2, 10))
def test_folds_partition(seed, n, k):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n)
    y[: 2 * k] = np.repeat([0, 1], k)
    folds = stratified_kfold(y, k, seed)
    allidx = np.concatenate(folds)
    np.testing.assert_array_equal(np.sort(allidx), np.arange(n))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    for train, test in train_test_pairs(folds):
        assert not set(train) & set(test)
        assert len(train) + len(test) == n


def test_telco_fold_positive_rate(telco_path):
    y = load_dataset(telco_path).labels
    rate = y.mean()
    for seed in range(10):
        for f in stratified_kfold(y, 5, seed):
            assert abs(y[f].mean() - rate) <= 0.005


def test_fold_errors():
    with pytest.raises(StratifyError):
        stratified_kfold(np.array([0, 0, 0, 1]), 2)
    with pytest.raises(StratifyError):
        stratified_kfold(np.zeros(10), 1)


# --- metrics --------------------------------------------------------------------

def test_metric_examples():
    m = compute_metrics(ConfusionCounts(tp=50, tn=30, fp=10, fn=10))
    assert m["accuracy"] == pytest.approx(0.8)
    assert m["precision"] == pytest.approx(5 / 6) and m["recall"] == pytest.approx(5 / 6)
    assert m["f1"] == pytest.approx(5 / 6)
    perfect = compute_metrics(ConfusionCounts(tp=3, tn=4, fp=0, fn=0))
    assert all(perfect[k] == 1.0 for k in ("accuracy", "precision", "recall", "f1"))
    empty = compute_metrics(ConfusionCounts(tp=0, tn=5, fp=0, fn=2))
    assert empty["precision"] == 0.0 and "precision_undefined" in empty["flags"]


def test_confusion_counts():
    c = confusion_counts([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert (c.tp, c.tn, c.fp, c.fn) == (2, 1, 1, 1)
    assert c.total == 5


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_metric_identities(tp, tn, fp, fn):
    if tp + tn + fp + fn == 0:
        return
    m = compute_metrics(ConfusionCounts(tp, tn, fp, fn))
    p, r, f1 = m["precision"], m["recall"], m["f1"]
    assert min(p, r) - 1e-12 <= f1 <= max(p, r) + 1e-12
    assert (m["accuracy"] == 1.0) == (fp == 0 and fn == 0)
    if p + r > 0:
        assert f1 == pytest.approx(2 * p * r / (p + r), abs=1e-12)
    for v in (m["accuracy"], p, r, f1):
        assert 0.0 <= v <= 1.0


# --- benchmark ------------------------------------------------------------------

def test_configuration_grid():
    assert len(reproduce_paper_config().configurations()) == 32
    cfg = BenchmarkConfig(models=("logistic", "pgm"), variants=("none", "margin"),
                          encodings=("stereo",), copies=(1, 2))
    assert cfg.configurations() == [
        ("logistic", "none", "none", 0), ("logistic", "margin", "none", 0),
        ("pgm", "none", "stereographic", 1), ("pgm", "none", "stereographic", 2),
        ("pgm", "margin", "stereographic", 1), ("pgm", "margin", "stereographic", 2)]
    with pytest.raises(ValueError):
        BenchmarkConfig(copies=(0,))
    with pytest.raises(ValueError):
        BenchmarkConfig(models=("rf",))


def test_record_count_and_aggregates():
    ds = small_dataset()
    cfg = BenchmarkConfig(models=("pgm",), variants=("qsmote",), encodings=("stereo",),
                          copies=(2,), seeds=tuple(range(10)), n_components=4)
    report = run_benchmark(ds, cfg)
    assert len(report.records) == 50 and not report.failed
    agg = report.aggregates("fold")[("pgm", "qsmote", "stereographic", 2)]
    acc = np.array([r.accuracy for r in report.records])
    assert agg["accuracy"] == (float(np.mean(acc)), float(np.std(acc, ddof=1)), 50)
    per_seed = [np.mean([r.f1 for r in report.records if r.seed == s]) for s in range(10)]
    agg_s = report.aggregates("seed")[("pgm", "qsmote", "stereographic", 2)]
    assert agg_s["f1"] == (float(np.mean(per_seed)), float(np.std(per_seed, ddof=1)), 10)
    for r in report.records:
        if not r.flags:
            assert r.f1 == pytest.approx(2 * r.precision * r.recall / (r.precision + r.recall), abs=1e-12)


def test_markdown_format():
    ds = small_dataset()
    cfg = BenchmarkConfig(models=("pgm",), variants=("qsmote",), encodings=("stereo",),
                          copies=(2,), seeds=(0, 1), n_components=4)
    md = run_benchmark(ds, cfg).markdown()
    rows = [line for line in md.splitlines() if line.startswith("| PGM")]
    assert len(rows) == 2  # one per aggregation mode
    cells = rows[0].split("|")[5:9]
    import re
    assert all(re.fullmatch(r" \d\.\d{4} ± \d\.\d{4} ", c) for c in cells)
    assert "logistic regression, not a random forest" in md


def test_no_leakage(monkeypatch):
    """Every fitting entry point sees only training-fold rows."""
    ds = small_dataset(n=100)
    X, y = ds.features, ds.labels
    seen = []
    real_pca, real_generate = bench.pca_fit, bench.generate
    real_fit = bench.MinMaxScaler.fit

    def rows_of(A):
        return {tuple(np.round(r, 12)) for r in np.asarray(A)}

    def spy_scaler(self, A):
        seen.append(("scaler", rows_of(A)))
        return real_fit(self, A)

    def spy_generate(A, *a, **k):
        seen.append(("resample", rows_of(A)))
        return real_generate(A, *a, **k)

    monkeypatch.setattr(bench.MinMaxScaler, "fit", spy_scaler)
    monkeypatch.setattr(bench, "generate", spy_generate)
    monkeypatch.setattr(bench, "pca_fit", lambda A, k: real_pca(A, k))

    folds = stratified_kfold(y, 5, 0)
    train, test = train_test_pairs(folds)[0]
    cfg = BenchmarkConfig(models=("pgm", "logistic"), variants=("qsmote", "margin"),
                          encodings=("amplitude",), copies=(1,), n_components=3)
    records = run_unit(X, y, train, test, 0, 0, cfg)
    assert len(records) == 4 and not any(r.failed for r in records)
    scaled_test = rows_of(MinMaxScaler().fit(X[train]).transform(X[test]))
    raw_test = rows_of(X[test])
    assert seen
    for kind, rows in seen:
        assert not rows & raw_test, kind
        assert not rows & scaled_test, kind


def test_pca_fits_on_resampled_training_rows():
    ds = small_dataset()
    cfg = BenchmarkConfig(n_components=3)
    transform, X_fit, y_fit, _ = prepare_training_fold(ds.features[:80], ds.labels[:80], "fidelity",
                                                       cfg, 0, 0)
    assert len(y_fit) == 2 * np.sum(ds.labels[:80] == 0)
    # PCA scores of the fitted rows are centered, which holds only for the rows PCA saw
    np.testing.assert_allclose(X_fit.mean(axis=0), 0, atol=1e-12)


def test_failed_cell_is_recorded_and_run_continues():
    ds = small_dataset(n=60)
    ds3 = Dataset(ds.features[:, :2], ds.labels, ds.feature_names[:2], ds.provenance)
    # 2 features cannot support 4 PCA components: every cell fails but the run completes
    cfg = BenchmarkConfig(models=("pgm",), variants=("qsmote",), encodings=("amplitude",),
                          copies=(1,), seeds=(0,), n_components=4)
    report = run_benchmark(ds3, cfg)
    assert len(report.failed) == 5 and report.success_fraction == 0.0
    assert "DimensionError" in report.results_csv()
    assert "Failed cells" in report.markdown()


def test_results_csv_round_trips_floats():
    ds = small_dataset()
    cfg = BenchmarkConfig(models=("kpgm",), variants=("knn",), encodings=("amplitude",),
                          copies=(1,), seeds=(0,), n_components=4)
    report = run_benchmark(ds, cfg)
    rows = list(csv.DictReader(report.results_csv().splitlines()))
    assert len(rows) == 5
    for row, rec in zip(rows, report.records):
        assert float(row["f1"]) == rec.f1 and float(row["accuracy"]) == rec.accuracy


def test_benchmark_is_deterministic_and_order_free():
    ds = small_dataset(seed=4)
    cfg = BenchmarkConfig(models=("pgm", "kpgm", "logistic"), variants=("qsmote", "margin"),
                          encodings=("stereo",), copies=(1,), seeds=(3, 4), n_components=4)
    a = run_benchmark(ds, cfg).results_csv()
    b = run_benchmark(ds, cfg).results_csv()
    assert a == b
    # seeds run in a different order produce the same per-seed records
    rev = run_benchmark(ds, BenchmarkConfig(**{**cfg.__dict__, "seeds": (4, 3)})).results_csv()
    assert sorted(a.splitlines()) == sorted(rev.splitlines())


def test_parallel_matches_serial():
    ds = small_dataset(seed=5)
    cfg = BenchmarkConfig(models=("pgm",), variants=("fidelity",), encodings=("amplitude",),
                          copies=(1,), seeds=(0,), n_components=4)
    serial = run_benchmark(ds, cfg).results_csv()
    parallel = run_benchmark(ds, BenchmarkConfig(**{**cfg.__dict__, "jobs": 2})).results_csv()
    assert serial == parallel


def test_report_success_fraction():
    ok = MetricRecord("pgm", "qsmote", "amplitude", 1, 0, 0, 0.5, 0.5, 0.5, 0.5)
    bad = MetricRecord("pgm", "qsmote", "amplitude", 1, 0, 1, error="boom")
    report = BenchmarkReport([ok] * 9 + [bad], BenchmarkConfig())
    assert report.success_fraction == pytest.approx(0.9)
