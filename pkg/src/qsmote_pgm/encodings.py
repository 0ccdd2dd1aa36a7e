"""Feature-vector to quantum-state encodings.

Both encoders map ``x in R^d`` to a real unit vector in ``R^(d+1)``:

* amplitude: prepend a bias of 1 and normalize,
* stereographic: inverse stereographic projection onto ``S^d`` with the
  last coordinate as the pole axis.

Every function accepts a single vector of shape ``(d,)`` or a batch of
shape ``(N, d)``; batches are encoded row by row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionOverflow, InvalidState

DEFAULT_DIMENSION_CAP = 4096

_METHOD_ALIASES = {
    "amplitude": "amplitude",
    "amp": "amplitude",
    "stereographic": "stereographic",
    "stereo": "stereographic",
}


@dataclass(frozen=True)
class EncodingConfig:
    method: str = "amplitude"
    rescale: float = 1.0
    precision: str = "double"

    def __post_init__(self):
        try:
            method = _METHOD_ALIASES[self.method]
        except KeyError:
            raise ValueError(f"unknown encoding method {self.method!r}") from None
        object.__setattr__(self, "method", method)
        if not self.rescale > 0:
            raise ValueError(f"rescale must be positive, got {self.rescale}")
        if self.precision not in ("single", "double"):
            raise ValueError(f"precision must be 'single' or 'double', got {self.precision!r}")

    @property
    def dtype(self):
        return np.float32 if self.precision == "single" else np.float64

    def to_dict(self) -> dict:
        return {"method": self.method, "rescale": self.rescale, "precision": self.precision}


def _as_features(x, cfg: EncodingConfig) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] < 1:
        raise ValueError(f"expected a feature vector or matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature values must be finite")
    return cfg.rescale * x


def encode_amplitude(x, cfg: EncodingConfig | None = None) -> np.ndarray:
    """Return ``(1, s*x) / ||(1, s*x)||`` with the bias at index 0."""
    cfg = cfg or EncodingConfig("amplitude")
    u = _as_features(x, cfg)
    bias = np.ones(u.shape[:-1] + (1,))
    v = np.concatenate([bias, u], axis=-1)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return v.astype(cfg.dtype, copy=False)


def encode_stereographic(x, cfg: EncodingConfig | None = None) -> np.ndarray:
    """Return ``(2u, r^2 - 1) / (r^2 + 1)`` where ``u = s*x`` and ``r = ||u||``."""
    cfg = cfg or EncodingConfig("stereographic")
    u = _as_features(x, cfg)
    r2 = np.sum(u * u, axis=-1, keepdims=True)
    v = np.concatenate([2.0 * u, r2 - 1.0], axis=-1) / (r2 + 1.0)
    # the identity 4r^2 + (r^2-1)^2 = (r^2+1)^2 holds exactly only in exact
    # arithmetic; renormalize so downstream 1e-12 checks are not at the mercy
    # of cancellation in r^2 - 1
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return v.astype(cfg.dtype, copy=False)


def encode(x, cfg: EncodingConfig) -> np.ndarray:
    if cfg.method == "amplitude":
        return encode_amplitude(x, cfg)
    return encode_stereographic(x, cfg)


def density_from_state(psi, atol: float = 1e-8) -> np.ndarray:
    """Pure-state density matrix ``psi psi^T``.

    Raises InvalidState when ``psi`` is not unit norm within ``atol``.
    """
    psi = np.asarray(psi)
    if psi.ndim != 1:
        raise InvalidState(f"expected a 1-d state vector, got shape {psi.shape}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > atol:
        raise InvalidState(f"state vector has norm {norm:.12g}, expected 1")
    return np.outer(psi, psi)


def check_tensor_dimension(q: int, n: int, cap: int = DEFAULT_DIMENSION_CAP) -> int:
    if n < 1:
        raise ValueError(f"number of copies must be >= 1, got {n}")
    side = q**n
    if side > cap:
        raise DimensionOverflow(f"{q}^{n} = {side} exceeds the dimension cap {cap}")
    return side


def tensor_power(rho, n: int, cap: int = DEFAULT_DIMENSION_CAP) -> np.ndarray:
    """n-fold Kronecker power of a square matrix."""
    rho = np.asarray(rho)
    check_tensor_dimension(rho.shape[0], n, cap)
    out = rho
    for _ in range(n - 1):
        out = np.kron(out, rho)
    return out


def lift_states(psi, n: int, cap: int = DEFAULT_DIMENSION_CAP) -> np.ndarray:
    """n-fold Kronecker power of state vectors, row-wise for a batch.

    ``outer(lift(psi), lift(psi)) == tensor_power(outer(psi, psi), n)``.
    """
    psi = np.asarray(psi)
    single = psi.ndim == 1
    batch = psi[None, :] if single else psi
    N, q = batch.shape
    check_tensor_dimension(q, n, cap)
    out = batch
    for _ in range(n - 1):
        out = (out[:, :, None] * batch[:, None, :]).reshape(N, -1)
    return out[0] if single else out
