"""Pretty Good Measurement (PGM) classifier on density matrices.

A fitted model is a POVM ``{F_i}`` built from class centroids
``rho_i = mean(rho_x^{(x)n})`` and priors ``p_i``::

    sigma = sum_i p_i rho_i
    E_i   = sigma^{-1/2} p_i rho_i sigma^{-1/2}
    F_i   = E_i + P_ker(sigma) / l

A query ``x`` is scored with the Born rule ``f_i = Tr(F_i rho_x^{(x)n})``.
The binary Helstrom measurement is provided for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encodings import (
    DEFAULT_DIMENSION_CAP,
    EncodingConfig,
    encode,
    lift_states,
    tensor_power,
)
from .errors import DimensionMismatch, EmptyClass, NotBinary, NotPSD

PSD_TOLERANCE = 1e-8
SYMMETRY_TOLERANCE = 1e-10


def default_rank_tolerance(side: int, dtype=np.float64) -> float:
    """Relative eigenvalue cutoff ``side * eps``; multiplied by ``lambda_max``."""
    return side * float(np.finfo(dtype).eps)


@dataclass(frozen=True)
class ClassEnsemble:
    centroids: np.ndarray  # (l, D, D)
    priors: np.ndarray  # (l,)
    n_copies: int
    classes: np.ndarray  # class value for each index
    counts: np.ndarray = field(default=None)

    @property
    def n_classes(self) -> int:
        return len(self.priors)

    @property
    def side(self) -> int:
        return self.centroids.shape[-1]


@dataclass(frozen=True)
class PovmSet:
    operators: np.ndarray  # (l, D, D)
    kernel_projector: np.ndarray  # (D, D)
    encoding: EncodingConfig
    n_copies: int
    rank_tolerance: float
    classes: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.operators.shape[0]

    @property
    def side(self) -> int:
        return self.operators.shape[-1]

    @property
    def n_features(self) -> int:
        q = round(self.side ** (1.0 / self.n_copies))
        return q - 1


@dataclass(frozen=True)
class PgmPrediction:
    scores: np.ndarray
    label: int
    # Tr(P_ker rho): weight of the query outside supp(sigma), shared equally by all classes
    kernel_weight: float = 0.0


def _normalize_priors(counts, class_weight, classes) -> np.ndarray:
    if class_weight is None:
        w = np.asarray(counts, dtype=np.float64)
    elif isinstance(class_weight, dict):
        w = np.array([float(class_weight[c]) for c in classes.tolist()])
    else:
        w = np.asarray(class_weight, dtype=np.float64)
        if w.shape != (len(classes),):
            raise ValueError(f"class_weight must have {len(classes)} entries")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("class weights must be nonnegative with a positive sum")
    return w / w.sum()


def class_centroids(
    states,
    labels,
    n_copies: int = 1,
    class_weight=None,
    classes=None,
    cap: int = DEFAULT_DIMENSION_CAP,
) -> ClassEnsemble:
    """Class-wise mean of ``n_copies``-fold tensor powers.

    ``states`` is either a batch of unit state vectors ``(N, q)`` (fast path,
    the lifted vectors are never squared individually) or a batch of density
    matrices ``(N, q, q)``.  ``classes`` fixes the class order; by default the
    sorted unique labels.  Priors are the empirical class frequencies unless
    ``class_weight`` overrides them.
    """
    states = np.asarray(states)
    labels = np.asarray(labels)
    if states.ndim not in (2, 3) or len(states) != len(labels):
        raise ValueError("states and labels must describe the same samples")
    classes = np.unique(labels) if classes is None else np.asarray(classes)
    centroids = []
    counts = []
    for c in classes:
        members = states[labels == c]
        if len(members) == 0:
            raise EmptyClass(f"class {c!r} has no samples")
        if states.ndim == 2:
            lifted = lift_states(members, n_copies, cap)
            rho = lifted.T @ lifted / len(members)
        else:
            rho = sum(tensor_power(r, n_copies, cap) for r in members) / len(members)
        centroids.append(0.5 * (rho + rho.T))
        counts.append(len(members))
    counts = np.array(counts)
    return ClassEnsemble(
        centroids=np.stack(centroids),
        priors=_normalize_priors(counts, class_weight, classes),
        n_copies=n_copies,
        classes=classes,
        counts=counts,
    )


def average_state(e: ClassEnsemble) -> np.ndarray:
    return np.tensordot(e.priors.astype(e.centroids.dtype), e.centroids, axes=1)


def psd_inv_sqrt(M, tol: float | None = None, with_kernel: bool = True):
    """Pseudoinverse square root of a symmetric PSD matrix.

    Eigenvalues ``lam <= tol * lam_max`` count as zero and span the returned
    kernel projector; the rest contribute ``lam^{-1/2}``.  ``tol`` is relative
    and defaults to ``side * eps``.

    Returns ``(inv_sqrt, kernel_projector)``; the projector is None when
    ``with_kernel`` is false.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > SYMMETRY_TOLERANCE * scale:
        raise ValueError("matrix is not symmetric")
    if tol is None:
        tol = default_rank_tolerance(M.shape[0], M.dtype)
    lam, V = np.linalg.eigh(0.5 * (M + M.T))
    if lam[0] < -PSD_TOLERANCE:
        raise NotPSD(f"matrix has eigenvalue {lam[0]:.3e} < -{PSD_TOLERANCE}")
    lam_max = max(lam[-1], 0.0)
    keep = lam > tol * lam_max
    if lam_max == 0.0:
        keep[:] = False
    R = V[:, keep]
    inv_sqrt = (R / np.sqrt(lam[keep])) @ R.T
    inv_sqrt = 0.5 * (inv_sqrt + inv_sqrt.T)
    if not with_kernel:
        return inv_sqrt, None
    K = V[:, ~keep]
    kernel_projector = K @ K.T
    return inv_sqrt, 0.5 * (kernel_projector + kernel_projector.T)


def fit_pgm(
    e: ClassEnsemble,
    tol: float | None = None,
    encoding: EncodingConfig | None = None,
) -> PovmSet:
    sigma = average_state(e)
    if tol is None:
        tol = default_rank_tolerance(e.side, sigma.dtype)
    S, _ = psd_inv_sqrt(sigma, tol, with_kernel=False)
    # E_i = M_i M_i^T with M_i = S sqrt(p_i rho_i), so every E_i is PSD to rounding
    factors = []
    for p, rho in zip(e.priors.astype(sigma.dtype), e.centroids):
        mu, U = np.linalg.eigh(rho)
        keep = mu > 0
        factors.append(S @ (U[:, keep] * np.sqrt(p * mu[keep])))
    # sum_i E_i is the range projector of sigma in exact arithmetic; a small
    # eigenvalue of sigma inflates rounding in it, so whiten once more by the
    # computed sum (a no-op in exact arithmetic) to restore completeness
    T = sum(M @ M.T for M in factors)
    t, W = np.linalg.eigh(0.5 * (T + T.T))
    on = t > 0.5
    R = W[:, on]
    refine = (R / np.sqrt(t[on])) @ R.T
    K = W[:, ~on]
    P_ker = K @ K.T
    share = P_ker / e.n_classes
    ops = []
    for M in factors:
        M = refine @ M
        ops.append(M @ M.T + share)
    return PovmSet(
        operators=np.stack(ops),
        kernel_projector=P_ker,
        encoding=encoding or EncodingConfig(),
        n_copies=e.n_copies,
        rank_tolerance=tol,
        classes=e.classes,
    )


def born_scores(operators, rho) -> np.ndarray:
    """``Tr(F_i rho)`` for every operator; ``rho`` may be a batch ``(N, D, D)``."""
    rho = np.asarray(rho)
    if rho.ndim == 2:
        return np.einsum("ijk,kj->i", operators, rho)
    return np.einsum("ijk,nkj->ni", operators, rho)


def _lifted_queries(p: PovmSet, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[-1]
    if d != p.n_features:
        raise DimensionMismatch(f"model was fitted on {p.n_features} features, got {d}")
    psi = encode(X, p.encoding)
    return lift_states(psi, p.n_copies, cap=max(p.side, DEFAULT_DIMENSION_CAP))


def pgm_scores(p: PovmSet, X):
    """Batch scores ``(N, l)`` and kernel weights ``(N,)`` for feature rows ``X``."""
    phi = np.atleast_2d(_lifted_queries(p, X))
    scores = np.stack([np.sum((phi @ F) * phi, axis=1) for F in p.operators], axis=1)
    kernel_weight = np.sum((phi @ p.kernel_projector) * phi, axis=1)
    return scores, kernel_weight


def pgm_predict(p: PovmSet, x) -> PgmPrediction:
    x = np.asarray(x)
    if x.ndim != 1:
        raise DimensionMismatch("pgm_predict takes a single feature vector; use pgm_scores for batches")
    scores, kw = pgm_scores(p, x[None, :])
    return PgmPrediction(scores=scores[0], label=int(np.argmax(scores[0])), kernel_weight=float(kw[0]))


def pgm_bound(e: ClassEnsemble, p: PovmSet) -> float:
    """``sum_i p_i Tr(F_i rho_i)``, the PGM success probability on the ensemble."""
    per_class = np.einsum("ijk,ikj->i", p.operators, e.centroids)
    return float(np.dot(e.priors, per_class))


@dataclass(frozen=True)
class HelstromPredictor:
    positive_projector: np.ndarray
    negative_projector: np.ndarray
    encoding: EncodingConfig
    n_copies: int
    classes: np.ndarray

    def predict_state(self, rho) -> int:
        """Class index 0 iff ``Tr(P+ rho) >= Tr(P- rho)``."""
        plus = np.trace(self.positive_projector @ rho)
        minus = np.trace(self.negative_projector @ rho)
        return 0 if plus >= minus else 1

    def predict_indices(self, X) -> np.ndarray:
        psi = encode(np.atleast_2d(np.asarray(X, dtype=np.float64)), self.encoding)
        phi = lift_states(psi, self.n_copies, cap=max(self.positive_projector.shape[0], DEFAULT_DIMENSION_CAP))
        plus = np.sum((phi @ self.positive_projector) * phi, axis=1)
        minus = np.sum((phi @ self.negative_projector) * phi, axis=1)
        return np.where(plus >= minus, 0, 1)

    def predict(self, X) -> np.ndarray:
        return self.classes[self.predict_indices(X)]


def helstrom_binary(e: ClassEnsemble, encoding: EncodingConfig | None = None):
    """Optimal two-class measurement from the eigenspaces of ``p1 rho1 - p2 rho2``.

    Returns ``(predictor, success_probability)`` with success
    ``(1 + ||Delta||_1) / 2``.  Zero eigenvalues go to the first class.
    """
    if e.n_classes != 2:
        raise NotBinary(f"Helstrom measurement needs exactly 2 classes, got {e.n_classes}")
    delta = e.priors[0] * e.centroids[0] - e.priors[1] * e.centroids[1]
    lam, V = np.linalg.eigh(0.5 * (delta + delta.T))
    pos = lam >= 0
    P_plus = V[:, pos] @ V[:, pos].T
    P_minus = V[:, ~pos] @ V[:, ~pos].T
    success = 0.5 * (1.0 + float(np.abs(lam).sum()))
    predictor = HelstromPredictor(
        positive_projector=P_plus,
        negative_projector=P_minus,
        encoding=encoding or EncodingConfig(),
        n_copies=e.n_copies,
        classes=e.classes,
    )
    return predictor, success


class PGMClassifier:
    """Estimator-style wrapper: encode, lift, fit the POVM, predict by argmax."""

    def __init__(
        self,
        encoding: EncodingConfig | str = "amplitude",
        n_copies: int = 1,
        tol: float | None = None,
        class_weight=None,
        cap: int = DEFAULT_DIMENSION_CAP,
    ):
        self.encoding = EncodingConfig(encoding) if isinstance(encoding, str) else encoding
        self.n_copies = n_copies
        self.tol = tol
        self.class_weight = class_weight
        self.cap = cap
        self.ensemble_: ClassEnsemble | None = None
        self.povm_: PovmSet | None = None

    def fit(self, X, y):
        psi = encode(np.asarray(X, dtype=np.float64), self.encoding)
        self.ensemble_ = class_centroids(psi, y, self.n_copies, self.class_weight, cap=self.cap)
        self.povm_ = fit_pgm(self.ensemble_, self.tol, self.encoding)
        return self

    def predict_scores(self, X) -> np.ndarray:
        scores, _ = pgm_scores(self.povm_, X)
        return scores

    def predict(self, X) -> np.ndarray:
        return self.povm_.classes[np.argmax(self.predict_scores(X), axis=1)]

    def bound(self) -> float:
        return pgm_bound(self.ensemble_, self.povm_)


class HelstromClassifier:
    def __init__(self, encoding: EncodingConfig | str = "amplitude", n_copies: int = 1,
                 class_weight=None, cap: int = DEFAULT_DIMENSION_CAP):
        self.encoding = EncodingConfig(encoding) if isinstance(encoding, str) else encoding
        self.n_copies = n_copies
        self.class_weight = class_weight
        self.cap = cap

    def fit(self, X, y):
        psi = encode(np.asarray(X, dtype=np.float64), self.encoding)
        self.ensemble_ = class_centroids(psi, y, self.n_copies, self.class_weight, cap=self.cap)
        self.predictor_, self.success_probability_ = helstrom_binary(self.ensemble_, self.encoding)
        return self

    def predict(self, X) -> np.ndarray:
        return self.predictor_.predict(X)
