"""Binary classification scores (trojan = positive class)."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple, Sequence


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def of(cls, y_true: Sequence[int], y_pred: Sequence[int]) -> "Confusion":
        tp = fp = tn = fn = 0
        for t, p in zip(y_true, y_pred):
            if t == 1:
                tp += p == 1
                fn += p != 1
            else:
                fp += p == 1
                tn += p != 1
        return cls(int(tp), int(fp), int(tn), int(fn))


def _div(a: float, b: float) -> float:
    return a / b if b else 0.0


def accuracy(c: Confusion) -> float:
    return _div(c.tp + c.tn, sum(c))


def precision(c: Confusion) -> float:
    return _div(c.tp, c.tp + c.fp)


def recall(c: Confusion) -> float:
    return _div(c.tp, c.tp + c.fn)


def specificity(c: Confusion) -> float:
    return _div(c.tn, c.tn + c.fp)


def f1(c: Confusion) -> float:
    return _div(2 * c.tp, 2 * c.tp + c.fp + c.fn)


def balanced_accuracy(c: Confusion) -> float:
    return 0.5 * (recall(c) + specificity(c))


def mcc(c: Confusion) -> float:
    """Matthews correlation; 0 when any marginal is empty."""
    tp, fp, tn, fn = c
    denom = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    return _div(tp * tn - fp * fn, denom)


METRICS: dict[str, Callable[[Confusion], float]] = {
    "accuracy": accuracy,
    "f1": f1,
    "mcc": mcc,
    "balanced_accuracy": balanced_accuracy,
}


def get_metric(name: str) -> Callable[[Confusion], float]:
    try:
        return METRICS[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}; choose from {sorted(METRICS)}") from None


def score(name: str, y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    return get_metric(name)(Confusion.of(y_true, y_pred))
