"""Gradient boosting with logistic loss over shallow regression trees."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError
from .logistic import sigmoid
from .tree import build_tree, presort

NEWTON_EPS = 1e-12


def log_loss(y, raw_score) -> float:
    """Mean logistic loss for 0/1 targets and raw (log-odds) scores."""
    y = np.asarray(y, dtype=np.float64)
    F = np.asarray(raw_score, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, F) - y * F))


def initial_score(y) -> float:
    p = float(np.mean(y))
    return float(np.log(p / (1.0 - p)))


def newton_leaf_values(residual, leaf_of, n_nodes) -> np.ndarray:
    """One Newton step per leaf: ``sum(r) / sum(|r| (1 - |r|))``."""
    a = np.abs(residual)
    num = np.bincount(leaf_of, weights=residual, minlength=n_nodes)
    den = np.bincount(leaf_of, weights=a * (1.0 - a), minlength=n_nodes)
    return num / np.maximum(den, NEWTON_EPS)


def fit_boosting(X, y, n_stages=100, learning_rate=0.1, max_depth=3, min_samples_split=2):
    """Stagewise fit of ``F = F0 + learning_rate * sum(tree_m)``.

    Returns
    -------
    init : float
        Log-odds of the positive fraction.
    trees : list of Tree
        Leaf values are the unscaled Newton steps.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    init = initial_score(y)
    F = np.full(y.shape[0], init)
    order = presort(X)
    trees = []
    for stage in range(n_stages):
        residual = y - sigmoid(F)
        tree, leaf_of = build_tree(X, residual, criterion="mse", splitter="best",
                                   max_depth=max_depth, min_samples_split=min_samples_split,
                                   presorted=order)
        values = newton_leaf_values(residual, leaf_of, tree.node_count)
        tree = tree.with_values(values)
        F = F + learning_rate * values[leaf_of]
        if not np.all(np.isfinite(F)):
            raise TrainingError(f"gradient boosting produced non-finite scores at stage {stage}")
        trees.append(tree)
    return init, trees
