"""Kernelized PGM: the PGM decision rule written with inner products only.

With encoded training states ``x_i``, power ``m``, power-kernel Gram matrix
``G_ij = (x_i . x_j)^m`` and query overlaps ``w_i = (x_i . z)^m``::

    Pr(k | z) = w^T G^{-1/2} Pi_k G^{-1/2} w

where ``Pi_k`` selects the training indices of class ``k``.  Cost depends on
the number of training samples only; ``(d+1)^m`` never appears.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encodings import EncodingConfig, encode
from .errors import DimensionMismatch, EmptyClass
from .pgm import default_rank_tolerance, psd_inv_sqrt

OUT_OF_SPAN_THRESHOLD = 1e-12


@dataclass(frozen=True)
class GramModel:
    training_states: np.ndarray  # (N, q)
    labels: np.ndarray  # class index per training row
    class_index_sets: tuple  # one index array per class
    power: int
    gram_inv_sqrt: np.ndarray  # (N, N)
    rank_tolerance: float
    encoding: EncodingConfig
    classes: np.ndarray

    @property
    def n_classes(self) -> int:
        return len(self.class_index_sets)

    @property
    def n_features(self) -> int:
        return self.training_states.shape[1] - 1


@dataclass(frozen=True)
class KpgmPrediction:
    class_scores: np.ndarray
    label: int
    span_coverage: float  # squared norm of the query's projection onto the training span

    @property
    def out_of_span(self) -> bool:
        return self.span_coverage < OUT_OF_SPAN_THRESHOLD


def power_gram(states, m: int = 1, other=None) -> np.ndarray:
    """Entries ``(x_i . y_j)^m``; ``other`` defaults to ``states`` (the Gram matrix)."""
    if m < 1:
        raise ValueError(f"power must be >= 1, got {m}")
    A = np.asarray(states)
    B = A if other is None else np.asarray(other)
    K = A @ B.T
    if other is None:
        K = 0.5 * (K + K.T)
    return K**m


def fit_kpgm(X, y, m: int = 1, cfg: EncodingConfig | None = None, tol: float | None = None,
             classes=None) -> GramModel:
    cfg = cfg or EncodingConfig()
    y = np.asarray(y)
    states = encode(np.asarray(X, dtype=np.float64), cfg)
    classes = np.unique(y) if classes is None else np.asarray(classes)
    index_sets = []
    labels = np.full(len(y), -1)
    for k, c in enumerate(classes):
        idx = np.flatnonzero(y == c)
        if len(idx) == 0:
            raise EmptyClass(f"class {c!r} has no samples")
        labels[idx] = k
        index_sets.append(idx)
    if np.any(labels < 0):
        raise ValueError("labels contain values outside the declared classes")
    G = power_gram(states, m)
    if tol is None:
        tol = default_rank_tolerance(G.shape[0], G.dtype)
    inv_sqrt, _ = psd_inv_sqrt(G, tol, with_kernel=False)
    return GramModel(
        training_states=states,
        labels=labels,
        class_index_sets=tuple(index_sets),
        power=m,
        gram_inv_sqrt=inv_sqrt,
        rank_tolerance=tol,
        encoding=cfg,
        classes=classes,
    )


def _projected(model: GramModel, Z) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if Z.shape[1] != model.n_features:
        raise DimensionMismatch(f"model was fitted on {model.n_features} features, got {Z.shape[1]}")
    w = power_gram(encode(Z, model.encoding), model.power, other=model.training_states)
    return w @ model.gram_inv_sqrt


def kpgm_scores(model: GramModel, Z) -> np.ndarray:
    """Class scores ``(N_query, l)`` for a batch of feature rows."""
    v2 = _projected(model, Z) ** 2
    return np.stack([v2[:, idx].sum(axis=1) for idx in model.class_index_sets], axis=1)


def kpgm_predict(model: GramModel, z) -> KpgmPrediction:
    z = np.asarray(z)
    if z.ndim != 1:
        raise DimensionMismatch("kpgm_predict takes a single feature vector; use kpgm_scores for batches")
    scores = kpgm_scores(model, z[None, :])[0]
    return KpgmPrediction(class_scores=scores, label=int(np.argmax(scores)),
                          span_coverage=float(scores.sum()))


def nearest_overlap_labels(train_states, train_labels, query_states) -> np.ndarray:
    """Label of ``argmax_i |x_i . z|`` for each query (brute-force 1-NN)."""
    overlaps = np.abs(np.asarray(query_states) @ np.asarray(train_states).T)
    return np.asarray(train_labels)[np.argmax(overlaps, axis=1)]


def kpgm_nn_limit_check(X, y, queries, powers=(1, 2, 4, 8, 16, 32),
                        cfg: EncodingConfig | None = None) -> dict:
    """Agreement of kPGM at each power with the maximal-overlap 1-NN rule.

    Returns ``{m: fraction of queries where both assign the same class}``.
    """
    cfg = cfg or EncodingConfig()
    y = np.asarray(y)
    states = encode(np.asarray(X, dtype=np.float64), cfg)
    oracle = nearest_overlap_labels(states, y, encode(np.asarray(queries, dtype=np.float64), cfg))
    result = {}
    for m in powers:
        model = fit_kpgm(X, y, m, cfg)
        predicted = model.classes[np.argmax(kpgm_scores(model, queries), axis=1)]
        result[m] = float(np.mean(predicted == oracle))
    return result


class KPGMClassifier:
    """Estimator-style wrapper around ``fit_kpgm`` / ``kpgm_scores``."""

    def __init__(self, encoding: EncodingConfig | str = "amplitude", power: int = 1,
                 tol: float | None = None):
        self.encoding = EncodingConfig(encoding) if isinstance(encoding, str) else encoding
        self.power = power
        self.tol = tol
        self.model_: GramModel | None = None

    def fit(self, X, y):
        self.model_ = fit_kpgm(X, y, self.power, self.encoding, self.tol)
        return self

    def predict_scores(self, X) -> np.ndarray:
        return kpgm_scores(self.model_, X)

    def predict(self, X) -> np.ndarray:
        return self.model_.classes[np.argmax(self.predict_scores(X), axis=1)]
