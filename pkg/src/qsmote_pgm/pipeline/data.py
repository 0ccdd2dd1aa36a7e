"""CSV ingestion and the Telco churn preprocessing chain."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError, SchemaError

TELCO_COLUMNS = (
    "customerID", "gender", "SeniorCitizen", "Partner", "Dependents", "tenure",
    "PhoneService", "MultipleLines", "InternetService", "OnlineSecurity",
    "OnlineBackup", "DeviceProtection", "TechSupport", "StreamingTV",
    "StreamingMovies", "Contract", "PaperlessBilling", "PaymentMethod",
    "MonthlyCharges", "TotalCharges", "Churn",
)
TELCO_FILENAME = "WA_Fn-UseC_-Telco-Customer-Churn.csv"
DATA_DIR_ENV = "QSMOTE_DATA_DIR"
TELCO_ROWS = 1000


@dataclass
class RawTable:
    columns: list
    data: dict  # column name -> np.ndarray (float64 for numeric, object for string)
    source: str = ""

    @property
    def n_rows(self) -> int:
        return len(self.data[self.columns[0]]) if self.columns else 0

    def kind(self, column: str) -> str:
        return "numeric" if self.data[column].dtype.kind == "f" else "string"


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], list(self.feature_names),
                       dict(self.provenance))


def _to_float(s: str):
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, schema_hints: dict | None = None) -> RawTable:
    """Read a headed CSV into typed columns, keeping the file's column order.

    A column is numeric when every cell parses as a finite float; otherwise
    it stays a string column.  ``schema_hints`` maps column names to
    ``"numeric"`` or ``"string"`` to override inference (a forced numeric
    column turns unparseable cells into NaN).
    """
    path = os.fspath(path)
    schema_hints = schema_hints or {}
    try:
        fh = open(path, newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        except csv.Error as exc:
            raise ParseError(f"{path}, row 1: {exc}") from None
        header = [h.strip() for h in header]
        if not any(header):
            raise ParseError(f"{path}, row 1: missing header")
        if any(not h for h in header):
            raise ParseError(f"{path}, row 1: header has an empty column name")
        if all(_to_float(h) is not None for h in header):
            raise ParseError(f"{path}, row 1: missing header (first row is all numeric)")
        if len(set(header)) != len(header):
            raise ParseError(f"{path}, row 1: duplicate column names in header")
        rows = []
        try:
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise ParseError(
                        f"{path}, row {lineno}: expected {len(header)} fields, got {len(row)}")
                rows.append(row)
        except csv.Error as exc:
            raise ParseError(f"{path}, row {reader.line_num}: {exc}") from None

    data = {}
    for j, name in enumerate(header):
        cells = [r[j] for r in rows]
        hint = schema_hints.get(name)
        if hint == "string":
            data[name] = np.array(cells, dtype=object)
            continue
        parsed = [_to_float(c) for c in cells]
        if hint == "numeric":
            data[name] = np.array([np.nan if v is None else v for v in parsed], dtype=np.float64)
        elif rows and all(v is not None for v in parsed):
            data[name] = np.array(parsed, dtype=np.float64)
        else:
            data[name] = np.array(cells, dtype=object)
    return RawTable(columns=header, data=data, source=path)


def find_telco_csv(path=None):
    """Resolve the Telco CSV from an explicit path or ``$QSMOTE_DATA_DIR``; None if absent."""
    candidates = []
    if path:
        candidates.append(os.fspath(path))
    data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir:
        candidates.append(os.path.join(data_dir, TELCO_FILENAME))
    for c in candidates:
        if os.path.isfile(c):
            return c
    return None


def _is_missing(col: np.ndarray) -> np.ndarray:
    if col.dtype.kind == "f":
        return np.isnan(col)
    return np.array([str(v).strip() == "" for v in col], dtype=bool)


def minmax_columns(X: np.ndarray):
    """Column minimum and range; constant columns get range 0."""
    lo = X.min(axis=0)
    return lo, X.max(axis=0) - lo


class MinMaxScaler:
    """Map each column to [0, 1] using statistics from ``fit``; constant columns map to 0."""

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        self.min_, self.range_ = minmax_columns(X)
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        safe = np.where(self.range_ > 0, self.range_, 1.0)
        return np.where(self.range_ > 0, (X - self.min_) / safe, 0.0)

    def fit_transform(self, X):
        return self.fit(X).transform(X)


def one_hot(table: RawTable, columns) -> tuple:
    """Expand string columns into 0/1 indicators in lexicographic category order.

    Numeric columns pass through.  Returns ``(matrix, names)`` with the
    original column order preserved.
    """
    blocks, names = [], []
    for name in columns:
        col = table.data[name]
        if col.dtype.kind == "f":
            blocks.append(col[:, None])
            names.append(name)
            continue
        values = np.array([str(v) for v in col], dtype=object)
        for cat in sorted(set(values.tolist())):
            blocks.append((values == cat).astype(np.float64)[:, None])
            names.append(f"{name}_{cat}")
    matrix = np.hstack(blocks) if blocks else np.empty((table.n_rows, 0))
    return matrix, names


def preprocess_telco(raw: RawTable, n_rows: int | None = TELCO_ROWS, scale: bool = True) -> Dataset:
    """customerID drop, TotalCharges coercion, NaN-row drop, one-hot, min-max, truncation."""
    missing = [c for c in TELCO_COLUMNS if c not in raw.data]
    if missing:
        raise SchemaError(f"Telco schema columns absent: {', '.join(missing)}")
    data = {c: raw.data[c] for c in raw.columns if c != "customerID"}
    total = data["TotalCharges"]
    if total.dtype.kind != "f":
        total = np.array([_to_float(str(v).strip()) if str(v).strip() else None for v in total],
                         dtype=object)
        total = np.array([np.nan if v is None else v for v in total], dtype=np.float64)
    data["TotalCharges"] = total
    columns = [c for c in raw.columns if c != "customerID"]

    keep = np.ones(raw.n_rows, dtype=bool)
    for c in columns:
        keep &= ~_is_missing(data[c])
    table = RawTable(columns, {c: data[c][keep] for c in columns}, raw.source)

    churn = np.array([str(v).strip() for v in table.data["Churn"]], dtype=object)
    bad = sorted(set(churn.tolist()) - {"Yes", "No"})
    if bad:
        raise SchemaError(f"Churn column has values other than Yes/No: {bad[:5]}")
    labels = (churn == "Yes").astype(np.int64)

    feature_columns = [c for c in columns if c != "Churn"]
    X, names = one_hot(table, feature_columns)
    if scale:
        X = MinMaxScaler().fit_transform(X)
    if n_rows is not None:
        X, labels = X[:n_rows], labels[:n_rows]
    return Dataset(X, labels, names, {
        "source": raw.source,
        "rows_read": raw.n_rows,
        "rows_after_nan_drop": int(keep.sum()),
        "rows": len(labels),
    })


def dataset_from_table(raw: RawTable, label_column: str = "label") -> Dataset:
    """Numeric feature columns plus an integer-coded label column, no other transforms."""
    if label_column not in raw.data:
        raise SchemaError(f"label column {label_column!r} absent")
    feature_columns = [c for c in raw.columns if c != label_column]
    non_numeric = [c for c in feature_columns if raw.kind(c) != "numeric"]
    if non_numeric:
        raise SchemaError(f"non-numeric feature columns: {', '.join(non_numeric)}")
    lab = raw.data[label_column]
    if lab.dtype.kind == "f":
        if not np.all(lab == np.round(lab)):
            raise SchemaError(f"label column {label_column!r} is not integer valued")
        labels = lab.astype(np.int64)
    else:
        values = sorted(set(str(v) for v in lab))
        labels = np.array([values.index(str(v)) for v in lab], dtype=np.int64)
    X = np.column_stack([raw.data[c] for c in feature_columns]) if feature_columns else \
        np.empty((raw.n_rows, 0))
    return Dataset(X, labels, feature_columns, {"source": raw.source, "rows": raw.n_rows})


def load_dataset(path, label_column: str | None = None, n_rows: int | None = TELCO_ROWS) -> Dataset:
    """Telco files (detected by schema) go through ``preprocess_telco``; others are read as-is."""
    raw = load_csv(path, schema_hints={"TotalCharges": "string"})
    if label_column is None and all(c in raw.data for c in TELCO_COLUMNS):
        return preprocess_telco(raw, n_rows=n_rows)
    return dataset_from_table(raw, label_column or "label")
