"""Stratified k-fold splitting."""

from __future__ import annotations

import numpy as np

from ..errors import StratifyError


def stratified_kfold(labels, n_splits: int = 5, seed: int = 0) -> list:
    """Return ``n_splits`` sorted test-index arrays that partition ``range(N)``.

    Within each class the indices are shuffled and dealt round-robin; the
    dealing position carries over between classes so fold sizes differ by at
    most one.
    """
    labels = np.asarray(labels)
    if n_splits < 2:
        raise StratifyError(f"n_splits must be at least 2, got {n_splits}")
    classes, counts = np.unique(labels, return_counts=True)
    small = classes[counts < n_splits]
    if len(small):
        raise StratifyError(f"classes {small.tolist()} have fewer than {n_splits} samples")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for c in classes:
        idx = rng.permutation(np.flatnonzero(labels == c))
        fold_of[idx] = (offset + np.arange(len(idx))) % n_splits
        offset = (offset + len(idx)) % n_splits
    return [np.flatnonzero(fold_of == f) for f in range(n_splits)]


def train_test_pairs(folds) -> list:
    n = sum(len(f) for f in folds)
    pairs = []
    for test in folds:
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        pairs.append((np.flatnonzero(mask), test))
    return pairs
