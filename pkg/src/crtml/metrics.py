"""Confusion-matrix accounting and sensitivity / specificity / accuracy.

The positive class is 1 (responder). Rates are fractions in [0, 1]; reports
render them as percentages.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ContractError, UndefinedRateError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ContractError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other):
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class EvalResult:
    sensitivity: float
    specificity: float
    accuracy: float
    counts: ConfusionMatrix

    def to_dict(self):
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "accuracy": self.accuracy,
            "counts": asdict(self.counts),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(float(data["sensitivity"]), float(data["specificity"]),
                   float(data["accuracy"]), ConfusionMatrix(**data["counts"]))


def _binary(v, name):
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ContractError(f"{name} must be a vector")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ContractError(f"{name} must contain only 0/1")
    return arr.astype(np.int64)


def confusion(predicted, actual):
    pred = _binary(predicted, "predicted")
    act = _binary(actual, "actual")
    if pred.shape != act.shape:
        raise ContractError(f"length mismatch: {pred.size} predictions vs {act.size} labels")
    if pred.size == 0:
        raise ContractError("need at least one prediction")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (act == 1))),
        fp=int(np.sum((pred == 1) & (act == 0))),
        tn=int(np.sum((pred == 0) & (act == 0))),
        fn=int(np.sum((pred == 0) & (act == 1))),
    )


def sensitivity(cm):
    if cm.tp + cm.fn == 0:
        raise UndefinedRateError("sensitivity undefined: no actual positives")
    return cm.tp / (cm.tp + cm.fn)


def specificity(cm):
    if cm.tn + cm.fp == 0:
        raise UndefinedRateError("specificity undefined: no actual negatives")
    return cm.tn / (cm.tn + cm.fp)


def accuracy(cm):
    if cm.total == 0:
        raise UndefinedRateError("accuracy undefined: empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


def evaluate(predicted, actual):
    """Confusion matrix plus all three rates for one prediction run."""
    cm = confusion(predicted, actual)
    return EvalResult(sensitivity(cm), specificity(cm), accuracy(cm), cm)


def average_results(results):
    """Unweighted mean of per-repetition rates; counts are summed for reference."""
    results = list(results)
    if not results:
        raise ContractError("cannot average an empty result list")
    counts = results[0].counts
    for r in results[1:]:
        counts = counts + r.counts
    k = len(results)
    return EvalResult(
        sensitivity=sum(r.sensitivity for r in results) / k,
        specificity=sum(r.specificity for r in results) / k,
        accuracy=sum(r.accuracy for r in results) / k,
        counts=counts,
    )
