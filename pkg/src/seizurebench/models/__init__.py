"""Five binary classifiers behind one fitted-model type.

``train_<kind>`` functions return a :class:`TrainedClassifier`;
:func:`predict_proba` and :func:`predict` score it. Models round-trip
through a versioned JSON document (:func:`save_model` / :func:`load_model`).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ..errors import DataFormatError
from .boosting import fit_boosting
from .logistic import fit_logistic, sigmoid
from .tree import Tree, build_tree

KINDS = (
    "logistic_regression",
    "decision_tree",
    "random_forest",
    "extra_trees",
    "gradient_boosting",
)

MODEL_FORMAT = "seizurebench.model"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for every model kind; each kind reads its own subset."""

    learning_rate: float = 0.1
    epochs: int = 1000
    l2: float = 0.0
    max_depth: int | None = None
    min_samples_split: int = 2
    max_features: str | int = "all"
    n_trees: int = 100
    bootstrap: bool = True
    n_stages: int = 100
    stage_max_depth: int = 3

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.epochs < 0 or self.n_stages < 0:
            raise ValueError("epochs and n_stages must be non-negative")
        if self.n_trees < 1 or self.stage_max_depth < 1:
            raise ValueError("n_trees and stage_max_depth must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be at least 2")
        mf = self.max_features
        if not (mf in ("all", "sqrt") or (isinstance(mf, int) and not isinstance(mf, bool) and mf > 0)):
            raise ValueError(f"max_features must be 'all', 'sqrt' or a positive int, got {mf!r}")

    @classmethod
    def for_kind(cls, kind: str, **overrides) -> "TrainConfig":
        base = DEFAULT_CONFIGS[_check_kind(kind)]
        unknown = set(overrides) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown hyperparameters for {kind}: {sorted(unknown)}")
        return replace(base, **overrides)

    def relevant(self, kind: str) -> dict:
        """The hyperparameters ``kind`` actually uses."""
        d = asdict(self)
        return {name: d[name] for name in RELEVANT_FIELDS[_check_kind(kind)]}


DEFAULT_CONFIGS = {
    "logistic_regression": TrainConfig(learning_rate=0.1, epochs=1000, l2=0.0),
    "decision_tree": TrainConfig(max_depth=None, min_samples_split=2, max_features="all"),
    "random_forest": TrainConfig(n_trees=100, bootstrap=True, max_features="sqrt"),
    "extra_trees": TrainConfig(n_trees=100, bootstrap=False, max_features="sqrt"),
    "gradient_boosting": TrainConfig(n_stages=100, learning_rate=0.1, stage_max_depth=3),
}

RELEVANT_FIELDS = {
    "logistic_regression": ("learning_rate", "epochs", "l2"),
    "decision_tree": ("max_depth", "min_samples_split", "max_features"),
    "random_forest": ("max_depth", "min_samples_split", "max_features", "n_trees", "bootstrap"),
    "extra_trees": ("max_depth", "min_samples_split", "max_features", "n_trees", "bootstrap"),
    "gradient_boosting": ("n_stages", "learning_rate", "stage_max_depth", "min_samples_split"),
}


def _check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    return kind


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TrainedClassifier:
    """A fitted binary classifier.

    ``weights``/``bias`` are set for logistic regression. Tree models keep
    their members in ``trees``; gradient boosting additionally uses
    ``init_score`` and ``learning_rate``.
    """

    kind: str
    config: TrainConfig
    seed: int
    n_features: int
    weights: np.ndarray | None = None
    bias: float = 0.0
    trees: tuple[Tree, ...] = field(default=())
    init_score: float = 0.0
    learning_rate: float = 0.0

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self, X)

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return predict(self, X, threshold)


def _check_xy(X, y, need_both=False):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataFormatError(f"X must be a non-empty 2-D matrix, got shape {X.shape}")
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise DataFormatError(f"{X.shape[0]} rows but labels of shape {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise DataFormatError("labels must be 0/1")
    if need_both and (y.min() == y.max()):
        raise DataFormatError("both classes must be present")
    return X, y.astype(np.int8)


def _config(kind, config):
    if config is None:
        return TrainConfig.for_kind(kind)
    if isinstance(config, dict):
        return TrainConfig.for_kind(kind, **config)
    return config


def train_logistic_regression(X, y, config=None, seed=0) -> TrainedClassifier:
    X, y = _check_xy(X, y, need_both=True)
    cfg = _config("logistic_regression", config)
    w, b = fit_logistic(X, y, cfg.learning_rate, cfg.epochs, cfg.l2)
    return TrainedClassifier("logistic_regression", cfg, seed, X.shape[1],
                             weights=_readonly(w), bias=float(b))


def train_decision_tree(X, y, config=None, seed=0) -> TrainedClassifier:
    X, y = _check_xy(X, y)
    cfg = _config("decision_tree", config)
    rng = np.random.default_rng(seed)
    tree, _ = build_tree(X, y, criterion="gini", splitter="best", max_depth=cfg.max_depth,
                         min_samples_split=cfg.min_samples_split,
                         max_features=cfg.max_features, rng=rng)
    return TrainedClassifier("decision_tree", cfg, seed, X.shape[1], trees=(tree,))


def _forest(X, y, cfg, seed, splitter, n_jobs):
    def grow(i):
        # per-tree stream keyed on (seed, i): independent of training order
        rng = np.random.default_rng([seed, i])
        if cfg.bootstrap:
            rows = rng.integers(0, X.shape[0], size=X.shape[0])
            Xi, yi = X[rows], y[rows]
        else:
            Xi, yi = X, y
        tree, _ = build_tree(Xi, yi, criterion="gini", splitter=splitter,
                             max_depth=cfg.max_depth, min_samples_split=cfg.min_samples_split,
                             max_features=cfg.max_features, rng=rng)
        return tree

    if n_jobs is None or n_jobs <= 1:
        return tuple(grow(i) for i in range(cfg.n_trees))
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return tuple(pool.map(grow, range(cfg.n_trees)))


def train_random_forest(X, y, config=None, seed=0, n_jobs=None) -> TrainedClassifier:
    """Bagged CART trees with per-split feature subsampling."""
    X, y = _check_xy(X, y)
    cfg = _config("random_forest", config)
    trees = _forest(X, y, cfg, seed, "best", n_jobs)
    return TrainedClassifier("random_forest", cfg, seed, X.shape[1], trees=trees)


def train_extra_trees(X, y, config=None, seed=0, n_jobs=None) -> TrainedClassifier:
    """Extremely randomised trees: random thresholds, full sample per tree by default."""
    X, y = _check_xy(X, y)
    cfg = _config("extra_trees", config)
    trees = _forest(X, y, cfg, seed, "random", n_jobs)
    return TrainedClassifier("extra_trees", cfg, seed, X.shape[1], trees=trees)


def train_gradient_boosting(X, y, config=None, seed=0) -> TrainedClassifier:
    X, y = _check_xy(X, y, need_both=True)
    cfg = _config("gradient_boosting", config)
    init, trees = fit_boosting(X, y, n_stages=cfg.n_stages, learning_rate=cfg.learning_rate,
                               max_depth=cfg.stage_max_depth,
                               min_samples_split=cfg.min_samples_split)
    return TrainedClassifier("gradient_boosting", cfg, seed, X.shape[1], trees=tuple(trees),
                             init_score=init, learning_rate=cfg.learning_rate)


TRAINERS = {
    "logistic_regression": train_logistic_regression,
    "decision_tree": train_decision_tree,
    "random_forest": train_random_forest,
    "extra_trees": train_extra_trees,
    "gradient_boosting": train_gradient_boosting,
}


def train(kind, X, y, config=None, seed=0, n_jobs=None) -> TrainedClassifier:
    trainer = TRAINERS[_check_kind(kind)]
    if kind in ("random_forest", "extra_trees"):
        return trainer(X, y, config, seed, n_jobs=n_jobs)
    return trainer(X, y, config, seed)


def staged_raw_scores(model: TrainedClassifier, X):
    """Yield boosting log-odds after 0, 1, ..., n_stages stages."""
    X = _check_width(model, X)
    F = np.full(X.shape[0], model.init_score)
    yield F
    for tree in model.trees:
        F = F + model.learning_rate * tree.predict(X)
        yield F


def _check_width(model, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataFormatError(
            f"model expects {model.n_features} features, got input of shape {X.shape}"
        )
    return X


def predict_proba(model: TrainedClassifier, X) -> np.ndarray:
    """Positive-class score in [0, 1] for every row of ``X``."""
    X = _check_width(model, X)
    if model.kind == "logistic_regression":
        return sigmoid(X @ model.weights + model.bias)
    if model.kind == "gradient_boosting":
        F = np.full(X.shape[0], model.init_score)
        for tree in model.trees:
            F = F + model.learning_rate * tree.predict(X)
        return sigmoid(F)
    total = np.zeros(X.shape[0])
    for tree in model.trees:
        total += tree.predict(X)
    return total / len(model.trees)


def predict(model: TrainedClassifier, X, threshold: float = 0.5) -> np.ndarray:
    """Hard 0/1 labels; a score exactly at ``threshold`` is positive."""
    return (predict_proba(model, X) >= threshold).astype(np.int8)


def model_to_dict(model: TrainedClassifier) -> dict:
    d = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "config": asdict(model.config),
        "seed": model.seed,
        "n_features": model.n_features,
    }
    if model.kind == "logistic_regression":
        d["weights"] = model.weights.tolist()
        d["bias"] = model.bias
    else:
        d["trees"] = [t.to_dict() for t in model.trees]
    if model.kind == "gradient_boosting":
        d["init_score"] = model.init_score
        d["learning_rate"] = model.learning_rate
    return d


def model_from_dict(d: dict) -> TrainedClassifier:
    if d.get("format") != MODEL_FORMAT:
        raise DataFormatError("not a seizurebench model document")
    if d.get("version") != MODEL_FORMAT_VERSION:
        raise DataFormatError(f"unsupported model format version {d.get('version')!r}")
    kind = _check_kind(d["kind"])
    cfg = TrainConfig(**d["config"])
    kw = {}
    if kind == "logistic_regression":
        kw["weights"] = _readonly(d["weights"])
        kw["bias"] = float(d["bias"])
    else:
        kw["trees"] = tuple(Tree.from_dict(t) for t in d["trees"])
    if kind == "gradient_boosting":
        kw["init_score"] = float(d["init_score"])
        kw["learning_rate"] = float(d["learning_rate"])
    return TrainedClassifier(kind, cfg, int(d["seed"]), int(d["n_features"]), **kw)


def save_model(model: TrainedClassifier, path, extra: dict | None = None) -> Path:
    """Write ``model`` as JSON; ``extra`` keys (e.g. preprocessing) are stored alongside."""
    doc = model_to_dict(model)
    if extra:
        doc.update(extra)
    path = Path(path)
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def load_model(path) -> tuple[TrainedClassifier, dict]:
    """Read a model file; returns the model and the full JSON document."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return model_from_dict(doc), doc


__all__ = [
    "KINDS",
    "TrainConfig",
    "TrainedClassifier",
    "Tree",
    "train",
    "train_logistic_regression",
    "train_decision_tree",
    "train_random_forest",
    "train_extra_trees",
    "train_gradient_boosting",
    "predict_proba",
    "predict",
    "staged_raw_scores",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]
