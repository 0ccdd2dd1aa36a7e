"""Quantum-inspired PGM / kernelized PGM classifiers and QSMOTE oversampling."""

from .encodings import (
    EncodingConfig,
    density_from_state,
    encode,
    encode_amplitude,
    encode_stereographic,
    tensor_power,
)
from .kpgm import GramModel, KPGMClassifier, fit_kpgm, kpgm_predict, kpgm_scores, power_gram
from .pgm import (
    ClassEnsemble,
    HelstromClassifier,
    PGMClassifier,
    PovmSet,
    average_state,
    class_centroids,
    fit_pgm,
    helstrom_binary,
    pgm_bound,
    pgm_predict,
    pgm_scores,
    psd_inv_sqrt,
)
from .qsmote import ResampleConfig, SyntheticBatch, resample

__version__ = "0.1.0"
