"""Binary classification metrics and calibration diagnostics.

All functions are pure and operate on plain sequences / numpy arrays so
they can be fed from any pipeline stage. Degenerate denominators resolve
to 0 with a ``UserWarning`` rather than raising, so harness runs stay total.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatchError


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    positive_class: int

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "positive_class": self.positive_class,
        }


@dataclass(frozen=True)
class CalibrationReport:
    """Brier score, ECE and the per-bin reliability data behind them.

    ``bins`` holds one ``(mean_confidence, empirical_accuracy, count)``
    triple per bin; empty bins have count 0 and contribute 0 to the ECE.
    """

    brier: float
    ece: float
    bins: tuple[tuple[float, float, int], ...]

    def as_dict(self) -> dict:
        return {
            "brier": self.brier,
            "ece": self.ece,
            "bins": [
                {"confidence": c, "accuracy": a, "count": n} for c, a, n in self.bins
            ],
        }


def confusion_metrics(predicted, gold, positive_class: int) -> MetricsReport:
    """Accuracy/precision/recall/F1 of predictions against the positive class.

    Precision and recall fall back to 0 (with a warning) when their
    denominator is 0; F1 is 2PR/(P+R) when P+R > 0, else 0.
    """
    pred = np.asarray(predicted, dtype=int)
    true = np.asarray(gold, dtype=int)
    if pred.shape != true.shape:
        raise LengthMismatchError(
            f"{pred.shape[0]} predictions vs {true.shape[0]} gold labels"
        )
    if pred.size == 0:
        raise LengthMismatchError("need at least one prediction")

    pp = pred == positive_class
    gp = true == positive_class
    tp = int(np.sum(pp & gp))
    fp = int(np.sum(pp & ~gp))
    fn = int(np.sum(~pp & gp))
    tn = int(np.sum(~pp & ~gp))

    accuracy = float(np.mean(pred == true))
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        warnings.warn("no positive predictions; precision set to 0")
        precision = 0.0
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        warnings.warn("no positive gold labels; recall set to 0")
        recall = 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return MetricsReport(accuracy, precision, recall, f1, tp, fp, fn, tn, positive_class)


def brier_score(positive_probs, gold) -> float:
    """Mean squared gap between the positive-class probability and the label."""
    p = np.asarray(positive_probs, dtype=float)
    y = np.asarray(gold, dtype=float)
    if p.shape != y.shape:
        raise LengthMismatchError(f"{p.shape[0]} probabilities vs {y.shape[0]} labels")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    return float(np.mean((p - y) ** 2))


def calibration_report(positive_probs, gold, bins: int = 10) -> CalibrationReport:
    """Reliability-diagram bins and ECE for positive-class probabilities.

    Bins are equal width on [0, 1] and right-closed: bin b covers
    ((b-1)/B, b/B], with p = 0 assigned to the first bin. Per-bin accuracy
    is the empirical rate of positive gold labels; confidence is the mean
    predicted probability. ECE is the count-weighted mean absolute gap.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    p = np.asarray(positive_probs, dtype=float)
    y = np.asarray(gold, dtype=int)
    if p.shape != y.shape:
        raise LengthMismatchError(f"{p.shape[0]} probabilities vs {y.shape[0]} labels")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")

    n = p.size
    # right-closed bins: index = ceil(p * B) - 1, with p = 0 mapping to bin 0
    idx = np.ceil(p * bins).astype(int) - 1
    idx = np.clip(idx, 0, bins - 1)

    rows = []
    ece = 0.0
    for b in range(bins):
        mask = idx == b
        count = int(np.sum(mask))
        if count == 0:
            rows.append((0.0, 0.0, 0))
            continue
        conf = float(np.mean(p[mask]))
        acc = float(np.mean(y[mask]))
        ece += (count / n) * abs(conf - acc)
        rows.append((conf, acc, count))
    return CalibrationReport(brier=brier_score(p, y), ece=float(ece), bins=tuple(rows))
