"""Quantum-inspired synthetic minority oversampling (QSMOTE) and its variants.

All variants interpolate or step from real minority samples with a factor
``lambda`` in [0, 1].  Under the default ``angle_shots`` policy lambda is the
angle between the amplitude-encoded endpoints, estimated from a simulated
swap test: ``hits ~ Binomial(shots, (1 + F) / 2)``, ``F_hat = 2 hits/shots - 1``,
``lambda = arccos(sqrt(F_hat)) / (pi / 2)``.

Variants:

* ``base``: two random distinct minority samples, ``x_i + lambda (x_j - x_i)``.
* ``knn``: the second endpoint is one of the k nearest minority neighbors.
* ``fidelity``: step from ``x`` toward its k-means centroid ``c`` by
  ``lambda F(x, c)`` along the unit direction.
* ``margin``: candidates from a base variant are kept only when a logistic
  model fitted on the original data is confident, ``|P(y=1|x) - 0.5| > margin``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .encodings import encode_amplitude
from .errors import InsufficientMinority, ZeroVector
from .logistic import LogisticRegression, fit_logistic
from .neighbors import kmeans, knn_indices

VARIANTS = ("base", "knn", "fidelity", "margin")
_VARIANT_ALIASES = {"qsmote": "base", "base": "base", "knn": "knn", "fidelity": "fidelity",
                    "margin": "margin"}

DEGENERATE_MINORITY = "DegenerateMinority"
AT_CENTROID = "AtCentroid"
ZERO_NORM = "ZeroNorm"
UNDERFILLED = "Underfilled"

MARGIN_ATTEMPT_FACTOR = 50


def canonical_variant(name: str) -> str:
    try:
        return _VARIANT_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown QSMOTE variant {name!r}") from None


@dataclass(frozen=True)
class ResampleConfig:
    variant: str = "base"
    k_neighbors: int = 5
    n_clusters: int = 3
    margin: float = 0.1
    base_for_margin: str = "base"
    shots: int = 1024
    lambda_policy: str = "angle_shots"
    step: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", canonical_variant(self.variant))
        base = canonical_variant(self.base_for_margin)
        if base == "margin":
            raise ValueError("base_for_margin cannot itself be 'margin'")
        object.__setattr__(self, "base_for_margin", base)
        if not 0.0 < self.margin < 0.5:
            raise ValueError(f"margin must lie in (0, 0.5), got {self.margin}")
        if self.lambda_policy not in ("angle_shots", "uniform"):
            raise ValueError(f"unknown lambda policy {self.lambda_policy!r}")
        if self.k_neighbors < 1 or self.n_clusters < 1 or self.shots < 1 or self.step <= 0:
            raise ValueError("k_neighbors, n_clusters, shots and step must be positive")


@dataclass
class ProvenanceRecord:
    variant: str
    parents: tuple  # row indices into the resampled input; -1 for "none"
    lam: float
    fidelity_weight: float | None = None
    filter_probability: float | None = None
    cluster: int | None = None
    flags: tuple = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["parents"] = list(self.parents)
        d["flags"] = list(self.flags)
        return d


@dataclass
class SyntheticBatch:
    samples: np.ndarray
    provenance: list
    label: object = None
    flags: set = field(default_factory=set)
    filter_model: LogisticRegression | None = None
    centers: np.ndarray | None = None

    def __len__(self):
        return len(self.samples)

    def provenance_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.provenance)


def _rng(rng, cfg: ResampleConfig) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(cfg.seed)


def sample_lambdas(A, B, cfg: ResampleConfig, rng: np.random.Generator) -> np.ndarray:
    """Vectorized ``sample_lambda`` for paired rows of ``A`` and ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape != B.shape:
        raise ValueError(f"endpoint shapes differ: {A.shape} vs {B.shape}")
    if cfg.lambda_policy == "uniform":
        return rng.uniform(0.0, 1.0, size=len(A))
    overlap = np.sum(encode_amplitude(A) * encode_amplitude(B), axis=1)
    fid = np.clip(overlap**2, 0.0, 1.0)
    hits = rng.binomial(cfg.shots, (1.0 + fid) / 2.0)
    f_hat = np.maximum(0.0, 2.0 * hits / cfg.shots - 1.0)
    lam = np.arccos(np.sqrt(f_hat)) / (np.pi / 2.0)
    return np.clip(lam, 0.0, 1.0)


def sample_lambda(x_a, x_b, cfg: ResampleConfig, rng: np.random.Generator) -> float:
    return float(sample_lambdas(np.asarray(x_a)[None, :], np.asarray(x_b)[None, :], cfg, rng)[0])


def fidelity_similarity(x, c) -> float:
    """Squared cosine similarity ``(x.c / (|x||c|))^2``."""
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    nx, nc = np.linalg.norm(x), np.linalg.norm(c)
    if nx == 0 or nc == 0:
        raise ZeroVector("fidelity similarity is undefined for a zero vector")
    return float(min(1.0, (np.dot(x, c) / (nx * nc)) ** 2))


def interpolate(a, b, lam):
    """Points ``a + lam (b - a)`` on the segments between paired rows."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    return a + lam[..., None] * (b - a)


def fidelity_step(x, c, lam):
    """Step ``x + lam F(x, c) (c - x)/|c - x|`` toward ``c``; batched over rows.

    Returns ``(x_new, fidelity, at_centroid, zero_norm)``.  A point already at
    its centroid stays put, and a zero vector on either side gets weight 0.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    d = c - x
    dist = np.linalg.norm(d, axis=1)
    nx, nc = np.linalg.norm(x, axis=1), np.linalg.norm(c, axis=1)
    zero = (nx == 0) | (nc == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        fid = np.where(zero, 0.0, np.sum(x * c, axis=1) / (nx * nc)) ** 2
        fid = np.minimum(fid, 1.0)
        at_centroid = dist == 0
        unit = np.where(at_centroid[:, None], 0.0, d / dist[:, None])
    return x + (lam * fid)[:, None] * unit, fid, at_centroid, zero


def minority_label(y):
    """The least frequent label (ties go to the larger label value)."""
    values, counts = np.unique(np.asarray(y), return_counts=True)
    order = np.lexsort((-values, counts)) if values.dtype.kind in "iuf" else np.argsort(counts, kind="stable")
    return values[order[0]]


def _minority(X, y, minority):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if minority is None:
        minority = minority_label(y)
    idx = np.flatnonzero(y == minority)
    if len(idx) == 0:
        raise InsufficientMinority("minority class is empty")
    return X, y, minority, idx


def _n_needed(target_count, n_min) -> int:
    return max(0, int(target_count) - n_min)


def _pair_generate(X, idx, count, cfg, rng, variant, neighbors=None):
    """Segment interpolation shared by base and knn."""
    M = X[idx]
    n_min = len(idx)
    a = rng.integers(n_min, size=count)
    if neighbors is None:
        b = rng.integers(n_min - 1, size=count)
        b = b + (b >= a)
    else:
        b = neighbors[a, rng.integers(neighbors.shape[1], size=count)]
    lam = sample_lambdas(M[a], M[b], cfg, rng)
    samples = interpolate(M[a], M[b], lam)
    prov = [ProvenanceRecord(variant, (int(idx[i]), int(idx[j])), float(l))
            for i, j, l in zip(a, b, lam)]
    return samples, prov


def base_qsmote(X, y, target_count: int, cfg: ResampleConfig | None = None, rng=None,
                minority=None) -> SyntheticBatch:
    cfg = cfg or ResampleConfig()
    rng = _rng(rng, cfg)
    X, y, minority, idx = _minority(X, y, minority)
    count = _n_needed(target_count, len(idx))
    if len(idx) == 1:
        samples = np.repeat(X[idx], count, axis=0)
        prov = [ProvenanceRecord("base", (int(idx[0]), int(idx[0])), 0.0, flags=(DEGENERATE_MINORITY,))
                for _ in range(count)]
        flags = {DEGENERATE_MINORITY} if count else set()
        return SyntheticBatch(samples.reshape(count, X.shape[1]), prov, minority, flags)
    samples, prov = _pair_generate(X, idx, count, cfg, rng, "base")
    return SyntheticBatch(samples.reshape(count, X.shape[1]), prov, minority)


def knn_qsmote(X, y, target_count: int, cfg: ResampleConfig | None = None, rng=None,
               minority=None) -> SyntheticBatch:
    cfg = cfg or ResampleConfig(variant="knn")
    rng = _rng(rng, cfg)
    X, y, minority, idx = _minority(X, y, minority)
    if len(idx) <= cfg.k_neighbors:
        raise InsufficientMinority(
            f"knn variant needs more than k={cfg.k_neighbors} minority samples, got {len(idx)}")
    count = _n_needed(target_count, len(idx))
    neighbors = knn_indices(X[idx], cfg.k_neighbors)
    samples, prov = _pair_generate(X, idx, count, cfg, rng, "knn", neighbors)
    return SyntheticBatch(samples.reshape(count, X.shape[1]), prov, minority)


def fidelity_qsmote(X, y, target_count: int, cfg: ResampleConfig | None = None, rng=None,
                    minority=None) -> SyntheticBatch:
    cfg = cfg or ResampleConfig(variant="fidelity")
    rng = _rng(rng, cfg)
    X, y, minority, idx = _minority(X, y, minority)
    count = _n_needed(target_count, len(idx))
    km = kmeans(X, cfg.n_clusters, rng)
    pick = idx[rng.integers(len(idx), size=count)]
    x = X[pick]
    cluster = km.assignments[pick]
    c = km.centers[cluster]
    lam = cfg.step * sample_lambdas(x, c, cfg, rng)
    samples, fid, at_centroid, zero = fidelity_step(x, c, lam)

    prov = []
    for k in range(count):
        flags = ()
        if at_centroid[k]:
            flags += (AT_CENTROID,)
        if zero[k]:
            flags += (ZERO_NORM,)
        prov.append(ProvenanceRecord("fidelity", (int(pick[k]), -1), float(lam[k]),
                                     fidelity_weight=float(fid[k]), cluster=int(cluster[k]),
                                     flags=flags))
    return SyntheticBatch(samples.reshape(count, X.shape[1]), prov, minority, centers=km.centers)


_BASE_GENERATORS = {"base": base_qsmote, "knn": knn_qsmote, "fidelity": fidelity_qsmote}


def passes_margin(prob, margin: float):
    """Strict retention rule ``|P(y=1|x) - 0.5| > margin``."""
    return np.abs(np.asarray(prob) - 0.5) > margin


def margin_qsmote(X, y, target_count: int, cfg: ResampleConfig | None = None, rng=None,
                  minority=None, filter_model: LogisticRegression | None = None) -> SyntheticBatch:
    """Filter candidates from ``cfg.base_for_margin`` by classifier confidence.

    The filter is fitted once on ``(X, y)`` unless one is supplied.  Candidate
    generation stops after ``50 * needed`` attempts; a short batch is flagged
    ``Underfilled``.
    """
    cfg = cfg or ResampleConfig(variant="margin")
    rng = _rng(rng, cfg)
    X, y, minority, idx = _minority(X, y, minority)
    needed = _n_needed(target_count, len(idx))
    model = filter_model if filter_model is not None else fit_logistic(X, y)
    generate = _BASE_GENERATORS[cfg.base_for_margin]

    kept_samples, kept_prov = [], []
    attempts = 0
    cap = MARGIN_ATTEMPT_FACTOR * needed
    while len(kept_prov) < needed and attempts < cap:
        chunk = min(cap - attempts, max(2 * (needed - len(kept_prov)), 16))
        cand = generate(X, y, len(idx) + chunk, cfg, rng, minority=minority)
        attempts += chunk
        prob = model.predict_proba(cand.samples)[:, 1]
        keep = np.flatnonzero(passes_margin(prob, cfg.margin))
        for k in keep[: needed - len(kept_prov)]:
            rec = cand.provenance[k]
            rec.variant = "margin"
            rec.filter_probability = float(prob[k])
            kept_samples.append(cand.samples[k])
            kept_prov.append(rec)
    samples = np.array(kept_samples).reshape(len(kept_prov), X.shape[1])
    flags = {UNDERFILLED} if len(kept_prov) < needed else set()
    return SyntheticBatch(samples, kept_prov, minority, flags, filter_model=model)


GENERATORS = {**_BASE_GENERATORS, "margin": margin_qsmote}


def generate(X, y, cfg: ResampleConfig, rng=None, target_count: int | None = None,
             minority=None) -> SyntheticBatch:
    """Run the configured variant; ``target_count`` defaults to the majority count."""
    y = np.asarray(y)
    if minority is None:
        minority = minority_label(y)
    if target_count is None:
        _, counts = np.unique(y, return_counts=True)
        target_count = int(counts.max())
    return GENERATORS[cfg.variant](X, y, target_count, cfg, _rng(rng, cfg), minority=minority)


def resample(X, y, cfg: ResampleConfig, rng=None, target_count: int | None = None):
    """Append synthetic minority rows; returns ``(X_out, y_out, batch)``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    batch = generate(X, y, cfg, rng, target_count)
    X_out = np.vstack([X, batch.samples])
    y_out = np.concatenate([y, np.full(len(batch), batch.label, dtype=y.dtype)])
    return X_out, y_out, batch
