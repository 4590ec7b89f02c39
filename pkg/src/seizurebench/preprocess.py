"""Feature scaling, outlier repair, class balancing and splitting.

Every function here is pure: it returns new arrays and never mutates its
inputs. Randomised steps take an integer seed and build their own
``numpy.random.Generator`` from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import NEGATIVE, POSITIVE
from .errors import DataFormatError
from .stats import quantile_sorted


def _as_matrix(features, what="features") -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataFormatError(f"{what} must be a non-empty 2-D matrix, got shape {X.shape}")
    return X


@dataclass(frozen=True)
class NormalizerParams:
    """Column-wise min and max for min-max scaling to [0, 1]."""

    per_feature_min: np.ndarray
    per_feature_max: np.ndarray

    method = "minmax"

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "per_feature_min": self.per_feature_min.tolist(),
            "per_feature_max": self.per_feature_max.tolist(),
        }


@dataclass(frozen=True)
class ZScoreParams:
    """Column-wise mean and population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    method = "zscore"

    def to_dict(self) -> dict:
        return {"method": self.method, "mean": self.mean.tolist(), "std": self.std.tolist()}


def normalizer_from_dict(d: dict):
    if d["method"] == "minmax":
        return NormalizerParams(
            np.asarray(d["per_feature_min"], dtype=np.float64),
            np.asarray(d["per_feature_max"], dtype=np.float64),
        )
    if d["method"] == "zscore":
        return ZScoreParams(
            np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64)
        )
    raise ValueError(f"unknown normalization method {d['method']!r}")


def fit_normalizer(features, method: str = "minmax"):
    X = _as_matrix(features)
    if method == "minmax":
        return NormalizerParams(X.min(axis=0), X.max(axis=0))
    if method == "zscore":
        return ZScoreParams(X.mean(axis=0), X.std(axis=0))
    raise ValueError(f"unknown normalization method {method!r}")


def apply_normalizer(params, features) -> np.ndarray:
    """Scale ``features`` with fitted params.

    Constant columns map to 0.0. Values outside the fitted range are not
    clamped.
    """
    X = _as_matrix(features)
    if isinstance(params, NormalizerParams):
        offset, span = params.per_feature_min, params.per_feature_max - params.per_feature_min
    else:
        offset, span = params.mean, params.std
    if X.shape[1] != offset.shape[0]:
        raise DataFormatError(
            f"normalizer fitted on {offset.shape[0]} columns, got {X.shape[1]}"
        )
    constant = span == 0
    out = (X - offset) / np.where(constant, 1.0, span)
    out[:, constant] = 0.0
    return out


def compute_iqr_bounds(column, k: float = 1.5) -> tuple[float, float]:
    """Tukey fences ``(Q1 - k*IQR, Q3 + k*IQR)`` for one column."""
    col = np.asarray(column, dtype=np.float64).ravel()
    if col.size == 0:
        raise DataFormatError("cannot compute IQR bounds of an empty column")
    if k < 0:
        raise ValueError("k must be non-negative")
    s = np.sort(col)
    q1, q3 = float(quantile_sorted(s, 0.25)), float(quantile_sorted(s, 0.75))
    iqr = q3 - q1
    return q1 - k * iqr, q3 + k * iqr


@dataclass(frozen=True)
class OutlierReport:
    total_replaced: int
    per_feature_replaced: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    medians: np.ndarray
    k: float

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return list(zip(self.lower.tolist(), self.upper.tolist()))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "total_replaced": self.total_replaced,
            "per_feature_replaced": self.per_feature_replaced.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "medians": self.medians.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OutlierReport":
        return cls(
            total_replaced=int(d["total_replaced"]),
            per_feature_replaced=np.asarray(d["per_feature_replaced"], dtype=np.int64),
            lower=np.asarray(d["lower"], dtype=np.float64),
            upper=np.asarray(d["upper"], dtype=np.float64),
            medians=np.asarray(d["medians"], dtype=np.float64),
            k=float(d["k"]),
        )


def fit_outlier_bounds(features, k: float = 1.5) -> OutlierReport:
    """Fences and replacement medians for every column, with nothing replaced yet."""
    X = _as_matrix(features)
    if k < 0:
        raise ValueError("k must be non-negative")
    s = np.sort(X, axis=0)
    q1, med, q3 = (quantile_sorted(s, q) for q in (0.25, 0.5, 0.75))
    iqr = q3 - q1
    zeros = np.zeros(X.shape[1], dtype=np.int64)
    return OutlierReport(0, zeros, q1 - k * iqr, q3 + k * iqr, med, float(k))


def apply_outlier_repair(report: OutlierReport, features) -> tuple[np.ndarray, OutlierReport]:
    """Replace cells strictly outside the report's fences with its medians."""
    X = _as_matrix(features)
    if X.shape[1] != report.lower.shape[0]:
        raise DataFormatError(
            f"outlier bounds fitted on {report.lower.shape[0]} columns, got {X.shape[1]}"
        )
    mask = (X < report.lower) | (X > report.upper)
    out = np.where(mask, report.medians, X)
    per_feature = mask.sum(axis=0).astype(np.int64)
    filled = OutlierReport(
        total_replaced=int(per_feature.sum()),
        per_feature_replaced=per_feature,
        lower=report.lower,
        upper=report.upper,
        medians=report.medians,
        k=report.k,
    )
    return out, filled


def replace_outliers(features, k: float = 1.5) -> tuple[np.ndarray, OutlierReport]:
    """Median-replace per-column IQR outliers.

    Fences and medians come from the original column, before any cell is
    touched.

    Returns
    -------
    repaired : ndarray
        Same shape as ``features``.
    report : OutlierReport
        Counts, fences and medians actually used.
    """
    return apply_outlier_repair(fit_outlier_bounds(features, k), features)


def _check_both_classes(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pos = np.flatnonzero(labels == POSITIVE)
    neg = np.flatnonzero(labels == NEGATIVE)
    if pos.size + neg.size != labels.size:
        raise DataFormatError("binary labels must be 0 (negative) or 1 (positive)")
    if pos.size == 0 or neg.size == 0:
        raise DataFormatError(
            f"both classes required, got {pos.size} positive / {neg.size} negative"
        )
    return pos, neg


def random_oversample(features, labels, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Duplicate random minority rows until both classes have equal counts.

    Original rows keep their order; the duplicates are appended after them.
    """
    X = _as_matrix(features)
    y = np.asarray(labels)
    if y.shape[0] != X.shape[0]:
        raise DataFormatError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    pos, neg = _check_both_classes(y)
    minority, majority = (pos, neg) if pos.size < neg.size else (neg, pos)
    deficit = majority.size - minority.size
    if deficit == 0:
        return X.copy(), y.copy()
    rng = np.random.default_rng(seed)
    extra = minority[rng.integers(0, minority.size, size=deficit)]
    return np.concatenate([X, X[extra]]), np.concatenate([y, y[extra]])


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    test: np.ndarray
    seed: int


def stratified_split(row_count: int, labels, test_fraction: float, seed: int) -> SplitIndices:
    """Per class, send ``floor(count * test_fraction)`` shuffled rows to test.

    Both index arrays are returned sorted ascending.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    y = np.asarray(labels)
    if y.shape[0] != row_count:
        raise DataFormatError(f"row_count {row_count} but {y.shape[0]} labels")
    rng = np.random.default_rng(seed)
    test_parts, train_parts = [], []
    for members in _check_both_classes(y):
        # guard against e.g. 0.29 * 100 == 28.999999999999996
        n_test = math.floor(members.size * test_fraction + 1e-9)
        shuffled = rng.permutation(members)
        test_parts.append(shuffled[:n_test])
        train_parts.append(shuffled[n_test:])
    return SplitIndices(
        train=np.sort(np.concatenate(train_parts)),
        test=np.sort(np.concatenate(test_parts)),
        seed=seed,
    )


def compute_correlation_matrix(features) -> np.ndarray:
    """Pearson correlation between columns.

    Entries involving a constant column are 0, including its diagonal.
    The result is exactly symmetric.
    """
    X = _as_matrix(features)
    if X.shape[0] < 2:
        raise DataFormatError("correlation needs at least 2 rows")
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc
    upper = np.triu(cov)
    cov = upper + np.triu(cov, 1).T
    sd = np.sqrt(np.diag(cov))
    constant = np.ptp(X, axis=0) == 0
    denom = np.outer(sd, sd)
    denom = np.triu(denom) + np.triu(denom, 1).T
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = cov / denom
    corr = np.clip(corr, -1.0, 1.0)
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    diag = np.where(constant, 0.0, 1.0)
    np.fill_diagonal(corr, diag)
    return corr
