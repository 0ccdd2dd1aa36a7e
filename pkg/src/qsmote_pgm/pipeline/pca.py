"""Principal component analysis via the sample covariance eigendecomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError


@dataclass(frozen=True)
class PCA:
    mean: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) @ self.components + self.mean


def pca_fit(X, n_components: int = 16) -> PCA:
    """Top eigenvectors of the (n-1)-normalized covariance, largest first.

    Each component's largest-magnitude entry is made positive.
    """
    X = np.asarray(X, dtype=np.float64)
    N, d = X.shape
    if not 1 <= n_components <= min(N, d):
        raise DimensionError(f"n_components={n_components} must lie in [1, min(N, d) = {min(N, d)}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / max(N - 1, 1)
    lam, V = np.linalg.eigh(0.5 * (cov + cov.T))
    order = np.argsort(lam, kind="stable")[::-1][:n_components]
    lam = np.clip(lam[order], 0.0, None)
    comps = V[:, order].T
    pivot = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(len(comps)), pivot])
    comps = comps * signs[:, None]
    total = np.clip(np.trace(cov), 0.0, None)
    ratio = lam / total if total > 0 else np.zeros_like(lam)
    return PCA(mean, comps, lam, ratio)
