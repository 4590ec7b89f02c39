"""Confusion matrices, threshold metrics and ROC analysis for 0/1 labels.

Positive (1) is the seizure class throughout. Metrics are stored as
fractions in [0, 1]; reports multiply by 100 when rendering.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    misclassified: int
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RocCurve:
    thresholds: tuple[float, ...]  # first entry is +inf for the (0, 0) point
    fpr: tuple[float, ...]
    tpr: tuple[float, ...]
    auc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr, self.tpr))

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "thresholds": [t if np.isfinite(t) else "inf" for t in self.thresholds],
            "fpr": list(self.fpr),
            "tpr": list(self.tpr),
        }

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "fpr", "tpr"])
            for t, f, r in zip(self.thresholds, self.fpr, self.tpr):
                w.writerow(["inf" if not np.isfinite(t) else repr(t), repr(f), repr(r)])
        return path


def _binary(labels, name) -> np.ndarray:
    a = np.asarray(labels)
    if a.ndim != 1:
        raise DataFormatError(f"{name} must be one-dimensional")
    if not np.all((a == 0) | (a == 1)):
        raise DataFormatError(f"{name} must contain only 0/1 labels")
    return a.astype(bool)


def confusion_matrix(y_true, y_pred) -> ConfusionMatrix:
    t, p = _binary(y_true, "y_true"), _binary(y_pred, "y_pred")
    if t.size != p.size:
        raise DataFormatError(f"length mismatch: {t.size} true vs {p.size} predicted labels")
    if t.size == 0:
        raise DataFormatError("cannot build a confusion matrix from empty input")
    return ConfusionMatrix(
        tp=int(np.count_nonzero(t & p)),
        tn=int(np.count_nonzero(~t & ~p)),
        fp=int(np.count_nonzero(~t & p)),
        fn=int(np.count_nonzero(t & ~p)),
    )


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    s = precision + recall
    f1 = 2.0 * precision * recall / s if s else 0.0
    return precision, recall, f1


def classification_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Precision, recall, F1 (positive class and macro) and accuracy.

    Any 0/0 ratio evaluates to 0.
    """
    if cm.total <= 0:
        raise DataFormatError("confusion matrix is empty")
    p, r, f = _prf(cm.tp, cm.fp, cm.fn)
    # the negative class's view swaps tp<->tn and fp<->fn
    pn, rn, fn_ = _prf(cm.tn, cm.fn, cm.fp)
    return MetricsReport(
        precision=p,
        recall=r,
        f1=f,
        accuracy=(cm.tp + cm.tn) / cm.total,
        misclassified=cm.fp + cm.fn,
        macro_precision=(p + pn) / 2.0,
        macro_recall=(r + rn) / 2.0,
        macro_f1=(f + fn_) / 2.0,
    )


def roc_curve(y_true, scores) -> RocCurve:
    """ROC points swept over distinct scores, highest first.

    Samples sharing a score change class together, so each distinct score
    contributes one point. The curve starts at (0, 0) and ends at (1, 1);
    the AUC is the trapezoidal area under these points.
    """
    t = _binary(y_true, "y_true")
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != t.shape:
        raise DataFormatError(f"length mismatch: {t.size} labels vs {s.size} scores")
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataFormatError("ROC needs both classes in y_true")

    order = np.argsort(-s, kind="stable")
    s_sorted, t_sorted = s[order], t[order]
    # last index of every run of equal scores
    ends = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    tp = np.r_[0, np.cumsum(t_sorted)[ends]]
    fp = np.r_[0, np.cumsum(~t_sorted)[ends]]
    thresholds = np.r_[np.inf, s_sorted[ends]]

    # integer trapezoids: twice the area in units of (1/n_neg) x (1/n_pos)
    twice_area = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    auc = twice_area / (2 * n_pos * n_neg)
    return RocCurve(
        thresholds=tuple(float(x) for x in thresholds),
        fpr=tuple(float(x) for x in fp / n_neg),
        tpr=tuple(float(x) for x in tp / n_pos),
        auc=auc,
    )


def roc_auc(y_true, scores) -> float:
    return roc_curve(y_true, scores).auc
