"""Versioned ``.npz`` dumps of fitted models.

A file holds a JSON header (format name, version, model kind, scalar
config) plus the model's arrays stored at their native precision, so a
round trip reproduces every entry bit for bit.  An optional preprocessing
block carries the scaler and PCA that map raw rows into model space.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .encodings import EncodingConfig
from .errors import ModelFormatError
from .kpgm import GramModel
from .logistic import LogisticRegression
from .pgm import HelstromPredictor, PovmSet

FORMAT = "qsmote_pgm.model"
VERSION = 1


def _header(kind: str, **fields) -> np.ndarray:
    body = {"format": FORMAT, "version": VERSION, "kind": kind, **fields}
    return np.frombuffer(json.dumps(body, sort_keys=True).encode(), dtype=np.uint8)


def save_model(path, model, preprocess: dict | None = None) -> None:
    """Write ``model`` (PovmSet, GramModel, HelstromPredictor or LogisticRegression).

    ``preprocess`` maps names to arrays (e.g. ``scaler_min``, ``pca_components``)
    stored under a ``pre_`` prefix.
    """
    arrays = {}
    if isinstance(model, PovmSet):
        header = _header("povm", encoding=model.encoding.to_dict(), n_copies=model.n_copies,
                         rank_tolerance=model.rank_tolerance)
        arrays.update(operators=model.operators, kernel_projector=model.kernel_projector,
                      classes=model.classes)
    elif isinstance(model, GramModel):
        header = _header("gram", encoding=model.encoding.to_dict(), power=model.power,
                         rank_tolerance=model.rank_tolerance)
        arrays.update(training_states=model.training_states, labels=model.labels,
                      gram_inv_sqrt=model.gram_inv_sqrt, classes=model.classes)
    elif isinstance(model, HelstromPredictor):
        header = _header("helstrom", encoding=model.encoding.to_dict(), n_copies=model.n_copies)
        arrays.update(positive_projector=model.positive_projector,
                      negative_projector=model.negative_projector, classes=model.classes)
    elif isinstance(model, LogisticRegression):
        header = _header("logistic", learning_rate=model.learning_rate, n_iter=model.n_iter,
                         l2=model.l2, intercept=float(model.intercept_))
        arrays.update(coef=model.coef_, classes=model.classes_)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    for name, value in (preprocess or {}).items():
        arrays[f"pre_{name}"] = np.asarray(value)
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        np.savez(fh, header=header, **arrays)
    os.replace(tmp, path)


def load_model(path):
    """Return ``(model, preprocess)`` from a file written by ``save_model``."""
    try:
        data = np.load(os.fspath(path), allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise ModelFormatError(f"{path}: not a model file ({exc})") from exc
    with data:
        if "header" not in data.files:
            raise ModelFormatError(f"{path}: missing header")
        header = json.loads(data["header"].tobytes().decode())
        if header.get("format") != FORMAT:
            raise ModelFormatError(f"{path}: unknown format {header.get('format')!r}")
        if header.get("version") != VERSION:
            raise ModelFormatError(f"{path}: unsupported version {header.get('version')!r}")
        arrays = {k: data[k] for k in data.files}
    kind = header["kind"]
    enc = EncodingConfig(**header["encoding"]) if "encoding" in header else None
    if kind == "povm":
        model = PovmSet(arrays["operators"], arrays["kernel_projector"], enc,
                        header["n_copies"], header["rank_tolerance"], arrays["classes"])
    elif kind == "gram":
        labels = arrays["labels"]
        index_sets = tuple(np.flatnonzero(labels == k) for k in range(len(arrays["classes"])))
        model = GramModel(arrays["training_states"], labels, index_sets, header["power"],
                          arrays["gram_inv_sqrt"], header["rank_tolerance"], enc, arrays["classes"])
    elif kind == "helstrom":
        model = HelstromPredictor(arrays["positive_projector"], arrays["negative_projector"], enc,
                                  header["n_copies"], arrays["classes"])
    elif kind == "logistic":
        model = LogisticRegression(header["learning_rate"], header["n_iter"], header["l2"])
        model.coef_ = arrays["coef"]
        model.intercept_ = header["intercept"]
        model.classes_ = arrays["classes"]
    else:
        raise ModelFormatError(f"{path}: unknown model kind {kind!r}")
    preprocess = {k[4:]: v for k, v in arrays.items() if k.startswith("pre_")}
    return model, preprocess


def predict_labels(model, X) -> np.ndarray:
    """Class predictions from any model kind that ``load_model`` returns."""
    from .kpgm import kpgm_scores
    from .pgm import pgm_scores

    if isinstance(model, PovmSet):
        scores, _ = pgm_scores(model, X)
        return model.classes[np.argmax(scores, axis=1)]
    if isinstance(model, GramModel):
        return model.classes[np.argmax(kpgm_scores(model, X), axis=1)]
    return model.predict(X)
