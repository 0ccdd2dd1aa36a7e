"""Confusion counts and the four reported classification metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PRECISION_UNDEFINED = "precision_undefined"
RECALL_UNDEFINED = "recall_undefined"
F1_UNDEFINED = "f1_undefined"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion_counts(y_true, y_pred, positive=1) -> ConfusionCounts:
    t = np.asarray(y_true) == positive
    p = np.asarray(y_pred) == positive
    return ConfusionCounts(
        tp=int(np.sum(t & p)), tn=int(np.sum(~t & ~p)),
        fp=int(np.sum(~t & p)), fn=int(np.sum(t & ~p)),
    )


def compute_metrics(c: ConfusionCounts) -> dict:
    """Accuracy, precision, recall and F1; a zero denominator yields 0 and a flag."""
    if c.total <= 0:
        raise ValueError("confusion counts are empty")
    flags = []
    accuracy = (c.tp + c.tn) / c.total
    if c.tp + c.fp:
        precision = c.tp / (c.tp + c.fp)
    else:
        precision = 0.0
        flags.append(PRECISION_UNDEFINED)
    if c.tp + c.fn:
        recall = c.tp / (c.tp + c.fn)
    else:
        recall = 0.0
        flags.append(RECALL_UNDEFINED)
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.append(F1_UNDEFINED)
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1,
            "flags": tuple(flags)}


METRICS = ("accuracy", "precision", "recall", "f1")


@dataclass
class MetricRecord:
    model: str
    variant: str
    encoding: str
    n_copies: int
    seed: int
    fold: int
    accuracy: float = float("nan")
    precision: float = float("nan")
    recall: float = float("nan")
    f1: float = float("nan")
    flags: tuple = field(default_factory=tuple)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def config(self) -> tuple:
        return (self.model, self.variant, self.encoding, self.n_copies)
