"""Classification metrics: positive-class and macro-averaged variants.

Zero-denominator precision/recall/F1 terms evaluate to 0 and set the
zero_division flag rather than raising.
"""

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch


@dataclass
class Metrics:
    accuracy: float
    precision_positive: float
    recall_positive: float
    f1_positive: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    tp: int
    fp: int
    fn: int
    tn: int
    zero_division: bool

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "precision_positive": self.precision_positive,
            "recall_positive": self.recall_positive,
            "f1_positive": self.f1_positive,
            "precision_macro": self.precision_macro,
            "recall_macro": self.recall_macro,
            "f1_macro": self.f1_macro,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
            "zero_division": self.zero_division,
        }


def confusion(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape[0] != y_pred.shape[0]:
        raise LengthMismatch(f"{y_true.shape[0]} labels vs {y_pred.shape[0]} predictions")
    for arr, what in ((y_true, "labels"), (y_pred, "predictions")):
        bad = set(np.unique(arr)) - {0, 1}
        if bad:
            raise ValueError(f"{what} must be 0/1, got {sorted(bad)}")
    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    fp = int(((y_true == 0) & (y_pred == 1)).sum())
    fn = int(((y_true == 1) & (y_pred == 0)).sum())
    tn = int(((y_true == 0) & (y_pred == 0)).sum())
    return tp, fp, fn, tn


def _prf(tp, fp, fn):
    hit_zero = False
    if tp + fp == 0:
        precision, hit_zero = 0.0, True
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall, hit_zero = 0.0, True
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0.0:
        f1 = 0.0
        hit_zero = hit_zero or (tp + fp > 0 and tp + fn > 0)
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1, hit_zero


def evaluate(y_true, y_pred):
    """Metrics for 0/1 labels with 1 = phishing (the positive class)."""
    tp, fp, fn, tn = confusion(y_true, y_pred)
    n = tp + fp + fn + tn
    if n == 0:
        raise LengthMismatch("no rows to evaluate")
    p_pos, r_pos, f_pos, z1 = _prf(tp, fp, fn)
    # the negative class scores come from the mirrored confusion counts
    p_neg, r_neg, f_neg, z2 = _prf(tn, fn, fp)
    return Metrics(
        accuracy=(tp + tn) / n,
        precision_positive=p_pos, recall_positive=r_pos, f1_positive=f_pos,
        precision_macro=0.5 * (p_pos + p_neg),
        recall_macro=0.5 * (r_pos + r_neg),
        f1_macro=0.5 * (f_pos + f_neg),
        tp=tp, fp=fp, fn=fn, tn=tn,
        zero_division=z1 or z2)
