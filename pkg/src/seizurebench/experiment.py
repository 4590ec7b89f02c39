"""End-to-end benchmark: preprocess once, train every requested model on one
shared split, evaluate on the held-out rows, and write the result tables.

Two pipeline orders are supported:

``paper``
    normalise (fit on all rows) -> outlier repair (all rows) -> binarise ->
    oversample (all rows) -> stratified split. Duplicated minority rows can
    land on both sides of the split.
``sound``
    binarise -> stratified split -> normalise and repair with statistics fit
    on the training rows only -> oversample the training rows only.
"""

from __future__ import annotations

import configparser
import contextlib
import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import metrics as mt
from . import preprocess as pp
from .errors import PipelineError
from .models import KINDS, TrainConfig, TrainedClassifier, predict, predict_proba, save_model, train

log = logging.getLogger(__name__)

REPORT_FORMAT = "seizurebench.report"
REPORT_FORMAT_VERSION = 1
MODES = ("paper", "sound")
NORMALIZATIONS = ("minmax", "zscore")
DEFAULT_SEED = 42

_STAGE_KEYS = {"oversample": 1, "split": 2, "model": 3}


def derive_seed(seed: int, stage: str, index: int = 0) -> int:
    """Independent 32-bit seed for one randomised pipeline stage."""
    ss = np.random.SeedSequence([seed, _STAGE_KEYS[stage], index])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str
    mode: str = "paper"
    seed: int = DEFAULT_SEED
    test_fraction: float = 0.2
    iqr_k: float = 1.5
    normalization: str = "minmax"
    model_overrides: dict = field(default_factory=dict)
    models: tuple = KINDS
    has_header: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.iqr_k < 0:
            raise ValueError("iqr_k must be non-negative")
        unknown = [m for m in self.models if m not in KINDS]
        unknown += [m for m in self.model_overrides if m not in KINDS]
        if unknown:
            raise ValueError(f"unknown model kinds {unknown}; expected a subset of {KINDS}")
        # dedupe, keep requested order
        object.__setattr__(self, "models", tuple(dict.fromkeys(self.models)))

    def train_config(self, kind: str) -> TrainConfig:
        return TrainConfig.for_kind(kind, **self.model_overrides.get(kind, {}))

    def to_dict(self) -> dict:
        return {
            "dataset": Path(self.dataset_path).name,
            "mode": self.mode,
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "iqr_k": self.iqr_k,
            "normalization": self.normalization,
            "models": list(self.models),
            "hyperparameters": {k: self.train_config(k).relevant(k) for k in self.models},
        }


@dataclass
class ModelResult:
    kind: str
    seed: int
    hyperparameters: dict
    confusion: mt.ConfusionMatrix
    metrics: mt.MetricsReport
    roc: mt.RocCurve
    train_seconds: float
    model: TrainedClassifier | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "hyperparameters": self.hyperparameters,
            "confusion_matrix": self.confusion.to_dict(),
            "metrics": self.metrics.to_dict(),
            "auc": self.roc.auc,
            "roc": self.roc.to_dict(),
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    provenance: dict
    results: list[ModelResult]
    outliers: pp.OutlierReport
    normalizer: object
    correlation: np.ndarray
    eda: ds.EdaSummary

    def result(self, kind: str) -> ModelResult:
        for r in self.results:
            if r.kind == kind:
                return r
        raise KeyError(kind)

    def to_dict(self) -> dict:
        # wall-clock timings are kept out: this document must be reproducible byte for byte
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_FORMAT_VERSION,
            "config": self.config.to_dict(),
            "provenance": self.provenance,
            "models": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def preprocessing_dict(self) -> dict:
        o = self.outliers
        return {
            "normalizer": self.normalizer.to_dict(),
            "outliers": {"k": o.k, "lower": o.lower.tolist(), "upper": o.upper.tolist(),
                         "medians": o.medians.tolist()},
        }


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


@dataclass
class PreparedData:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    normalizer: object
    outliers: pp.OutlierReport
    correlation: np.ndarray
    provenance: dict


def _prepare_paper(raw: ds.RawDataset, cfg: ExperimentConfig) -> PreparedData:
    with stage("normalize"):
        norm = pp.fit_normalizer(raw.features, cfg.normalization)
        X = pp.apply_normalizer(norm, raw.features)
    with stage("outliers"):
        X, outliers = pp.replace_outliers(X, cfg.iqr_k)
    with stage("correlation"):
        corr = pp.compute_correlation_matrix(X)
    with stage("binarize"):
        y = ds.binarize_labels(raw.labels)
    with stage("oversample"):
        X, y = pp.random_oversample(X, y, derive_seed(cfg.seed, "oversample"))
    with stage("split"):
        split = pp.stratified_split(len(y), y, cfg.test_fraction, derive_seed(cfg.seed, "split"))
    prov = {
        "outliers_replaced": outliers.total_replaced,
        "oversampled_rows": int(len(y)),
    }
    return PreparedData(X[split.train], y[split.train], X[split.test], y[split.test],
                        norm, outliers, corr, prov)


def _prepare_sound(raw: ds.RawDataset, cfg: ExperimentConfig) -> PreparedData:
    with stage("binarize"):
        y = ds.binarize_labels(raw.labels)
    with stage("split"):
        split = pp.stratified_split(len(y), y, cfg.test_fraction, derive_seed(cfg.seed, "split"))
    X_tr, X_te = raw.features[split.train], raw.features[split.test]
    y_tr, y_te = y[split.train], y[split.test]
    with stage("normalize"):
        norm = pp.fit_normalizer(X_tr, cfg.normalization)
        X_tr, X_te = pp.apply_normalizer(norm, X_tr), pp.apply_normalizer(norm, X_te)
    with stage("outliers"):
        fitted = pp.fit_outlier_bounds(X_tr, cfg.iqr_k)
        X_tr, outliers = pp.apply_outlier_repair(fitted, X_tr)
        X_te, test_outliers = pp.apply_outlier_repair(fitted, X_te)
    with stage("correlation"):
        corr = pp.compute_correlation_matrix(X_tr)
    with stage("oversample"):
        X_tr, y_tr = pp.random_oversample(X_tr, y_tr, derive_seed(cfg.seed, "oversample"))
    prov = {
        "outliers_replaced": outliers.total_replaced,
        "outliers_replaced_test": test_outliers.total_replaced,
        "oversampled_rows": int(len(y_tr)),
    }
    return PreparedData(X_tr, y_tr, X_te, y_te, norm, outliers, corr, prov)


def run_experiment(cfg: ExperimentConfig, keep_models: bool = False) -> ExperimentReport:
    """Run the full pipeline for every model in ``cfg.models``.

    Raises
    ------
    PipelineError
        Wrapping whatever failed, tagged with the pipeline stage.
    """
    with stage("load"):
        raw = ds.load_csv(cfg.dataset_path, has_header=cfg.has_header)
    with stage("eda"):
        eda = ds.summarize(raw)
    prep = _prepare_paper(raw, cfg) if cfg.mode == "paper" else _prepare_sound(raw, cfg)

    binary = ds.binarize_labels(raw.labels)
    provenance = {
        "raw_rows": len(raw),
        "class_counts": {str(k): v for k, v in eda.class_counts.items()},
        "raw_positive": int(binary.sum()),
        "raw_negative": int(len(binary) - binary.sum()),
        **prep.provenance,
        "train_size": int(len(prep.y_train)),
        "test_size": int(len(prep.y_test)),
        "test_positive": int(prep.y_test.sum()),
        "test_negative": int(len(prep.y_test) - prep.y_test.sum()),
    }
    log.info("prepared %s-mode data: %d train / %d test rows",
             cfg.mode, provenance["train_size"], provenance["test_size"])

    results = []
    for kind in cfg.models:
        tc = cfg.train_config(kind)
        seed = derive_seed(cfg.seed, "model", KINDS.index(kind))
        with stage(f"train:{kind}"):
            t0 = time.perf_counter()
            model = train(kind, prep.X_train, prep.y_train, tc, seed=seed, n_jobs=cfg.n_jobs)
            elapsed = time.perf_counter() - t0
        with stage(f"evaluate:{kind}"):
            scores = predict_proba(model, prep.X_test)
            cm = mt.confusion_matrix(prep.y_test, predict(model, prep.X_test))
            roc = mt.roc_curve(prep.y_test, scores)
        log.info("%s: accuracy %.4f auc %.4f (%.1fs)",
                 kind, mt.classification_metrics(cm).accuracy, roc.auc, elapsed)
        results.append(ModelResult(
            kind=kind, seed=seed, hyperparameters=tc.relevant(kind), confusion=cm,
            metrics=mt.classification_metrics(cm), roc=roc, train_seconds=elapsed,
            model=model if keep_models else None,
        ))
    return ExperimentReport(cfg, provenance, results, prep.outliers, prep.normalizer,
                            prep.correlation, eda)


def _pct(x: float) -> str:
    return f"{100.0 * x:.2f}"


METRICS_COLUMNS = ["model", "precision", "recall", "f1", "accuracy", "macro_precision",
                   "macro_recall", "macro_f1", "auc", "misclassified", "test_size"]


def write_correlation_csv(corr: np.ndarray, path) -> Path:
    path = Path(path)
    names = [f"X{j + 1}" for j in range(corr.shape[0])]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([""] + names)
        for name, row in zip(names, corr):
            w.writerow([name] + [repr(float(v)) for v in row])
    return path


def write_outliers_csv(report: pp.OutlierReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "lower", "upper", "median", "replaced"])
        for j in range(report.lower.shape[0]):
            w.writerow([f"X{j + 1}", repr(float(report.lower[j])), repr(float(report.upper[j])),
                        repr(float(report.medians[j])), int(report.per_feature_replaced[j])])
    return path


def emit_report(report: ExperimentReport, out_dir, formats=("json", "csv")) -> list[Path]:
    """Write the report and its tables under ``out_dir``; returns the paths written.

    ``json`` writes ``report.json`` (deterministic) and ``timings.json``;
    ``csv`` writes the metrics table, confusion matrices, one ROC file per
    model, the correlation matrix and the per-feature outlier table.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PipelineError("emit", exc) from exc
    unknown = set(formats) - {"json", "csv"}
    if unknown:
        raise ValueError(f"unknown report formats {sorted(unknown)}")
    written = []
    with stage("emit"):
        if "json" in formats:
            p = out / "report.json"
            p.write_text(report.to_json(), encoding="utf-8")
            written.append(p)
            p = out / "timings.json"
            timings = {r.kind: round(r.train_seconds, 3) for r in report.results}
            p.write_text(json.dumps({"train_seconds": timings}, indent=2) + "\n", encoding="utf-8")
            written.append(p)
        if "csv" in formats:
            p = out / "metrics.csv"
            with p.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(METRICS_COLUMNS)
                for r in report.results:
                    m = r.metrics
                    w.writerow([r.kind, _pct(m.precision), _pct(m.recall), _pct(m.f1),
                                _pct(m.accuracy), _pct(m.macro_precision), _pct(m.macro_recall),
                                _pct(m.macro_f1), f"{r.roc.auc:.4f}", m.misclassified,
                                r.confusion.total])
            written.append(p)
            p = out / "confusion_matrices.csv"
            with p.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["model", "tp", "tn", "fp", "fn", "total"])
                for r in report.results:
                    c = r.confusion
                    w.writerow([r.kind, c.tp, c.tn, c.fp, c.fn, c.total])
            written.append(p)
            for r in report.results:
                written.append(r.roc.write_csv(out / f"roc_{r.kind}.csv"))
            written.append(write_correlation_csv(report.correlation, out / "correlation.csv"))
            written.append(write_outliers_csv(report.outliers, out / "outliers.csv"))
    return written


def save_models(report: ExperimentReport, out_dir) -> list[Path]:
    """Write every kept model as ``<kind>.json`` with the fitted preprocessing attached."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    extra = {"preprocessing": report.preprocessing_dict()}
    return [save_model(r.model, out / f"{r.kind}.json", extra)
            for r in report.results if r.model is not None]


def _coerce(text: str):
    v = text.strip()
    low = v.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low == "none":
        return None
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def read_config_file(path) -> dict:
    """Parse an INI-style config into ExperimentConfig keyword arguments.

    ``[experiment]`` holds run settings (``data``, ``mode``, ``seed``,
    ``test_fraction``, ``iqr_k``, ``normalization``, ``models``); a
    section named after a model kind holds its hyperparameter overrides::

        [experiment]
        data = epileptic.csv
        models = extra_trees, random_forest

        [extra_trees]
        n_trees = 200
    """
    parser = configparser.ConfigParser()
    path = Path(path)
    if not parser.read(path, encoding="utf-8"):
        raise FileNotFoundError(f"config file not found: {path}")
    kwargs: dict = {}
    overrides: dict = {}
    for section in parser.sections():
        items = {k: _coerce(v) for k, v in parser.items(section)}
        if section == "experiment":
            for key, value in items.items():
                if key in ("data", "dataset_path"):
                    # relative data paths resolve against the config file
                    p = Path(str(value))
                    kwargs["dataset_path"] = str(p if p.is_absolute() else path.parent / p)
                elif key == "models":
                    kwargs["models"] = tuple(m.strip() for m in str(value).split(",") if m.strip())
                elif key in ("mode", "normalization"):
                    kwargs[key] = str(value)
                elif key in ("seed", "test_fraction", "iqr_k", "has_header", "n_jobs"):
                    kwargs[key] = value
                else:
                    raise ValueError(f"unknown [experiment] key {key!r} in {path}")
        elif section in KINDS:
            TrainConfig.for_kind(section, **items)  # validate early
            overrides[section] = items
        else:
            raise ValueError(f"unknown config section [{section}] in {path}")
    if overrides:
        kwargs["model_overrides"] = overrides
    return kwargs
