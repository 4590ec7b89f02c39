"""Loading and summarising the UCI Epileptic Seizure Recognition table.

The distributed CSV has one opaque id column, 178 amplitude columns (one
second of EEG) and a trailing integer label in ``{1, ..., 5}``. Label 1 is
seizure activity; labels 2-5 are the four non-seizure recording states.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .stats import quantile_sorted

N_FEATURES = 178
LABELS = (1, 2, 3, 4, 5)
SEIZURE_LABEL = 1

POSITIVE = 1
NEGATIVE = 0


@dataclass(frozen=True)
class RawDataset:
    """Feature matrix with aligned ids and 5-class labels."""

    row_ids: tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        n = self.features.shape[0]
        if self.features.ndim != 2:
            raise DataFormatError("features must be a 2-D matrix")
        if len(self.labels) != n or len(self.row_ids) != n:
            raise DataFormatError(
                f"row count mismatch: {n} feature rows, {len(self.labels)} labels, "
                f"{len(self.row_ids)} ids"
            )
        if not np.all(np.isfinite(self.features)):
            raise DataFormatError("features contain non-finite values")
        bad = ~np.isin(self.labels, LABELS)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DataFormatError(f"row {i}: label {self.labels[i]} not in {{1,...,5}}")

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class EdaSummary:
    class_counts: dict[int, int]
    per_feature: tuple[tuple[float, float, float, float], ...]  # (min, max, mean, median)
    total_rows: int

    def to_dict(self) -> dict:
        return {
            "total_rows": self.total_rows,
            "class_counts": {str(k): v for k, v in sorted(self.class_counts.items())},
            "per_feature": [
                {"feature": j, "min": mn, "max": mx, "mean": mean, "median": med}
                for j, (mn, mx, mean, med) in enumerate(self.per_feature)
            ],
        }


def _parse_label(text: str, row: int) -> int:
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(f"row {row}: label {text!r} is not numeric") from None
    if not value.is_integer() or int(value) not in LABELS:
        raise DataFormatError(f"row {row}: label {text!r} not in {{1,...,5}}")
    return int(value)


def load_csv(path, has_header: bool = True) -> RawDataset:
    """Parse the seizure CSV into a :class:`RawDataset`.

    Column 0 is kept verbatim as the row id and never enters the feature
    matrix. Header text, when present, is skipped without validation.
    Row numbers in error messages count data rows from 0.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")

    expected = N_FEATURES + 2
    ids: list[str] = []
    rows: list[list[float]] = []
    labels: list[int] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if has_header:
            next(reader, None)
        for i, rec in enumerate(reader):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != expected:
                raise DataFormatError(
                    f"row {i}: expected {expected} columns, found {len(rec)}"
                )
            try:
                values = [float(c) for c in rec[1:-1]]
            except ValueError:
                for j, c in enumerate(rec[1:-1]):
                    try:
                        float(c)
                    except ValueError:
                        raise DataFormatError(
                            f"row {i}, feature {j}: non-numeric value {c!r}"
                        ) from None
                raise
            if not all(math.isfinite(v) for v in values):
                raise DataFormatError(f"row {i}: non-finite feature value")
            ids.append(rec[0])
            rows.append(values)
            labels.append(_parse_label(rec[-1], i))

    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return RawDataset(
        row_ids=tuple(ids),
        features=np.asarray(rows, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64),
    )


def write_csv(dataset: RawDataset, path, header: bool = True) -> None:
    """Write a dataset back out in the same column layout ``load_csv`` reads."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([""] + [f"X{j + 1}" for j in range(N_FEATURES)] + ["y"])
        for rid, row, label in zip(dataset.row_ids, dataset.features, dataset.labels):
            w.writerow([rid] + [repr(float(v)) for v in row] + [int(label)])


def binarize_labels(labels) -> np.ndarray:
    """Map label 1 to ``POSITIVE`` and labels 2-5 to ``NEGATIVE``."""
    labels = np.asarray(labels)
    if labels.size and not np.all(np.isin(labels, LABELS)):
        bad = labels[~np.isin(labels, LABELS)][0]
        raise DataFormatError(f"label {bad} not in {{1,...,5}}")
    return (labels == SEIZURE_LABEL).astype(np.int8)


def summarize(dataset: RawDataset) -> EdaSummary:
    n = len(dataset)
    if n == 0:
        raise DataFormatError("cannot summarise an empty dataset")
    counts = {lab: int(np.count_nonzero(dataset.labels == lab)) for lab in LABELS}
    s = np.sort(dataset.features, axis=0)
    mins, maxs = s[0], s[-1]
    means = dataset.features.mean(axis=0)
    medians = quantile_sorted(s, 0.5)
    per_feature = tuple(
        (float(a), float(b), float(c), float(d))
        for a, b, c, d in zip(mins, maxs, means, medians)
    )
    return EdaSummary(class_counts=counts, per_feature=per_feature, total_rows=n)
