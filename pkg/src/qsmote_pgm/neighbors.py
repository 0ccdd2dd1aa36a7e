"""Exact Euclidean k-nearest neighbors and Lloyd's k-means."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def pairwise_sq_distances(A, B=None) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = A if B is None else np.asarray(B, dtype=np.float64)
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def knn_indices(X, k: int) -> np.ndarray:
    """Indices ``(N, k)`` of each row's k nearest other rows.

    Ties are broken by the lower row index.  Self is always excluded, even
    when duplicate rows exist.
    """
    X = np.asarray(X, dtype=np.float64)
    N = len(X)
    if not 1 <= k < N:
        raise ValueError(f"need 1 <= k < {N}, got k={k}")
    D = pairwise_sq_distances(X)
    np.fill_diagonal(D, np.inf)
    order = np.argsort(D, axis=1, kind="stable")
    return order[:, :k]


@dataclass
class KMeansResult:
    centers: np.ndarray
    assignments: np.ndarray
    n_iter: int
    converged: bool


def kmeans(X, n_clusters: int, rng: np.random.Generator, max_iter: int = 300,
           tol: float = 1e-6) -> KMeansResult:
    """Lloyd iterations from ``n_clusters`` distinct data points chosen by ``rng``.

    Stops when no center moves by more than ``tol`` (Euclidean).  An emptied
    cluster keeps its previous center.
    """
    X = np.asarray(X, dtype=np.float64)
    distinct = np.unique(X, axis=0)
    if n_clusters > len(distinct):
        raise ValueError(f"cannot form {n_clusters} clusters from {len(distinct)} distinct points")
    # np.unique sorts rows, so the choice depends only on the set of points
    centers = distinct[rng.choice(len(distinct), size=n_clusters, replace=False)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        assign = np.argmin(pairwise_sq_distances(X, centers), axis=1)
        new = centers.copy()
        for c in range(n_clusters):
            members = X[assign == c]
            if len(members):
                new[c] = members.mean(axis=0)
        shift = np.max(np.linalg.norm(new - centers, axis=1))
        centers = new
        if shift <= tol:
            converged = True
            break
    assign = np.argmin(pairwise_sq_distances(X, centers), axis=1)
    return KMeansResult(centers=centers, assignments=assign, n_iter=it, converged=converged)
