from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seizurebench.errors import DataFormatError, TrainingError
from seizurebench.models import (
    KINDS,
    TrainConfig,
    TrainedClassifier,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    predict_proba,
    save_model,
    staged_raw_scores,
    train,
    train_decision_tree,
    train_extra_trees,
    train_gradient_boosting,
    train_logistic_regression,
    train_random_forest,
)
from seizurebench.models.boosting import initial_score, log_loss
from seizurebench.models.logistic import loss_and_grad
from seizurebench.models.tree import LEAF, resolve_max_features

SMALL = {
    "random_forest": {"n_trees": 7},
    "extra_trees": {"n_trees": 7},
    "gradient_boosting": {"n_stages": 15},
    "logistic_regression": {"epochs": 200},
}


def blobs(n=200, d=4, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n).astype(np.int8)
    X = rng.normal(0, 1, (n, d)) + 1.2 * y[:, None]
    return X, y


# ---- logistic regression ---------------------------------------------------

def finite_difference_grad(w, b, X, y, l2, h=1e-6):
    gw = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        gw[i] = (loss_and_grad(w + e, b, X, y, l2)[0] - loss_and_grad(w - e, b, X, y, l2)[0]) / (2 * h)
    gb = (loss_and_grad(w, b + h, X, y, l2)[0] - loss_and_grad(w, b - h, X, y, l2)[0]) / (2 * h)
    return gw, gb


def max_relative_error(analytic, numeric):
    a, n = np.atleast_1d(analytic), np.atleast_1d(numeric)
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)))


def test_lr_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(10, 4)), rng.integers(0, 2, 10).astype(float)
    w, b = rng.normal(size=4), 0.3
    _, gw, gb = loss_and_grad(w, b, X, y, l2=0.25)
    nw, nb = finite_difference_grad(w, b, X, y, 0.25)
    assert max_relative_error(np.r_[gw, gb], np.r_[nw, nb]) <= 1e-5


def test_lr_separable_1d():
    X = np.array([[-1.0]] * 50 + [[1.0]] * 50)
    y = np.array([0] * 50 + [1] * 50)
    model = train_logistic_regression(X, y)
    assert np.array_equal(predict(model, X), y)


def test_lr_zero_weights_score_half():
    X = np.random.default_rng(1).normal(size=(5, 3))
    model = train_logistic_regression(X, [0, 1, 0, 1, 1], {"epochs": 0})
    assert np.all(predict_proba(model, X) == 0.5)


def test_lr_divergence_raises():
    X = np.array([[1e200], [-1e200]])
    with pytest.raises(TrainingError):
        train_logistic_regression(X, [1, 0], {"learning_rate": 1e10, "epochs": 5})


def test_lr_row_order_free():
    X, y = blobs(60, 3, seed=4)
    perm = np.random.default_rng(2).permutation(60)
    a = train_logistic_regression(X, y, {"epochs": 100})
    b = train_logistic_regression(X[perm], y[perm], {"epochs": 100})
    Xq = np.random.default_rng(3).normal(size=(20, 3))
    assert np.allclose(predict_proba(a, Xq), predict_proba(b, Xq), rtol=0, atol=1e-12)


# ---- decision tree / forests -------------------------------------------------

def test_rf_degenerate_equals_decision_tree():
    X, y = blobs(120, 5, seed=2)
    dt = train_decision_tree(X, y, seed=9)
    rf = train_random_forest(X, y, {"n_trees": 1, "bootstrap": False, "max_features": "all"}, seed=9)
    Xq = np.random.default_rng(0).normal(size=(50, 5))
    assert np.array_equal(predict_proba(dt, Xq), predict_proba(rf, Xq))


@pytest.mark.parametrize("kind", ["random_forest", "extra_trees", "decision_tree"])
def test_unanimous_labels(kind):
    X = np.random.default_rng(0).random((30, 3))
    model = train(kind, X, np.ones(30, np.int8), SMALL.get(kind), seed=1)
    assert np.all(predict_proba(model, X) == 1.0)


def test_forest_determinism_and_thread_independence():
    X, y = blobs(150, 6, seed=5)
    for kind in ("random_forest", "extra_trees"):
        a = train(kind, X, y, SMALL[kind], seed=11)
        b = train(kind, X, y, SMALL[kind], seed=11, n_jobs=3)
        for ta, tb in zip(a.trees, b.trees):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.threshold, tb.threshold)
            assert np.array_equal(ta.value, tb.value)


def test_forest_seed_matters():
    X, y = blobs(150, 6, seed=5)
    a = train_random_forest(X, y, SMALL["random_forest"], seed=1)
    b = train_random_forest(X, y, SMALL["random_forest"], seed=2)
    assert any(not np.array_equal(ta.threshold, tb.threshold) for ta, tb in zip(a.trees, b.trees))


def test_identical_members_average_to_member():
    X, y = blobs(80, 3, seed=6)
    dt = train_decision_tree(X, y)
    rf = TrainedClassifier("random_forest", TrainConfig.for_kind("random_forest"), 0, 3,
                           trees=dt.trees * 5)
    Xq = np.random.default_rng(1).normal(size=(40, 3))
    assert np.allclose(predict_proba(rf, Xq), predict_proba(dt, Xq), rtol=1e-15, atol=0)


def test_extra_trees_skips_constant_features():
    rng = np.random.default_rng(0)
    X = np.column_stack([np.full(40, 3.0), rng.random(40), np.full(40, -1.0)])
    y = (X[:, 1] > 0.5).astype(np.int8)
    model = train_extra_trees(X, y, {"n_trees": 3, "max_features": 1}, seed=0)
    for tree in model.trees:
        used = set(tree.feature[tree.feature != LEAF].tolist())
        assert used == {1}


def test_extra_trees_pure_single_leaf():
    X = np.random.default_rng(0).random((20, 4))
    m = train_extra_trees(X, np.zeros(20, np.int8), {"n_trees": 1}, seed=3)
    assert m.trees[0].node_count == 1
    assert set(predict_proba(m, X).tolist()) == {0.0}


def slow_extra_tree(X, y, k, rng):
    """Recursive, loop-based extra tree drawing from ``rng`` in the same order.

    Returns nested tuples ``(feature, threshold, left, right)`` or a leaf
    fraction.
    """
    n, d = X.shape
    pos = sum(int(v) for v in y)
    if n < 2 or pos in (0, n):
        return pos / n
    order = list(range(d)) if k >= d else [int(i) for i in rng.permutation(d)]
    feats = []
    for f in order:
        if len(feats) == k:
            break
        if X[:, f].min() < X[:, f].max():
            feats.append(f)
    if not feats:
        return pos / n
    u = rng.random(len(feats))
    best = None
    for f, ui in zip(feats, u):
        lo, hi = X[:, f].min(), X[:, f].max()
        t = lo + (hi - lo) * ui
        if t >= hi:
            t = lo
        left = [int(v) for v, x in zip(y, X[:, f]) if x <= t]
        right = [int(v) for v, x in zip(y, X[:, f]) if x > t]
        score = Fraction(0)
        for side in (left, right):
            p = Fraction(sum(side), len(side))
            score += Fraction(len(side), n) * 2 * p * (1 - p)
        if best is None or (score, f) < (best[0], best[1]):
            best = (score, f, t)
    _, f, t = best
    mask = X[:, f] <= t
    return (f, t, slow_extra_tree(X[mask], y[mask], k, rng),
            slow_extra_tree(X[~mask], y[~mask], k, rng))


def nested(tree, node=0):
    if tree.feature[node] == LEAF:
        return tree.value[node]
    return (int(tree.feature[node]), float(tree.threshold[node]),
            nested(tree, tree.left[node]), nested(tree, tree.right[node]))


def test_extra_trees_matches_slow_reference():
    X, y = blobs(200, 5, seed=12)
    model = train_extra_trees(X, y, {"n_trees": 3}, seed=21)
    k = resolve_max_features("sqrt", 5)
    for i, tree in enumerate(model.trees):
        ref = slow_extra_tree(X, y, k, np.random.default_rng([21, i]))
        assert nested(tree) == ref
    stump = train_decision_tree(X, y, {"max_depth": 1})
    acc = lambda m: float(np.mean(predict(m, X) == y))
    assert acc(model) >= acc(stump)


# ---- gradient boosting ---------------------------------------------------------

def test_gb_balanced_prior_is_zero():
    X, _ = blobs(40, 2)
    y = np.array([0, 1] * 20)
    model = train_gradient_boosting(X, y, {"n_stages": 0})
    assert model.init_score == 0.0
    assert np.all(predict_proba(model, X) == 0.5)


def test_gb_zero_stages_constant():
    X, y = blobs(50, 3, seed=1)
    model = train_gradient_boosting(X, y, {"n_stages": 0})
    p = y.mean()
    expected = 1 / (1 + np.exp(-np.log(p / (1 - p))))
    assert np.allclose(predict_proba(model, X), expected, rtol=0, atol=1e-15)
    assert model.init_score == initial_score(y)


def staged_losses(model, X, y):
    return [log_loss(y, F) for F in staged_raw_scores(model, X)]


@settings(max_examples=40, deadline=None)
@given(st.integers(10, 120), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_gb_training_loss_non_increasing(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, n)
    y[:2] = [0, 1]
    model = train_gradient_boosting(X, y, {"n_stages": 30})
    losses = staged_losses(model, X, y)
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_gb_staged_scores_match_predict():
    X, y = blobs(100, 3, seed=2)
    model = train_gradient_boosting(X, y, SMALL["gradient_boosting"])
    *_, F = staged_raw_scores(model, X)
    assert np.array_equal(1 / (1 + np.exp(-F)) > 0.5, predict_proba(model, X) > 0.5)


def test_gb_requires_both_classes():
    with pytest.raises(DataFormatError):
        train_gradient_boosting(np.zeros((3, 1)), [1, 1, 1])


# ---- shared contract --------------------------------------------------------------

@pytest.mark.parametrize("kind", KINDS)
def test_scores_in_unit_interval(kind):
    X, y = blobs(120, 4, seed=7)
    model = train(kind, X, y, SMALL.get(kind), seed=0)
    Xq = np.random.default_rng(8).normal(0, 5, (300, 4))
    s = predict_proba(model, Xq)
    assert s.shape == (300,) and np.all((s >= 0) & (s <= 1))
    assert np.array_equal(s, predict_proba(model, Xq))


def test_predict_threshold_inclusive():
    X = np.zeros((3, 1))
    model = TrainedClassifier("logistic_regression", TrainConfig.for_kind("logistic_regression"),
                              0, 1, weights=np.zeros(1), bias=0.0)
    assert predict(model, X).tolist() == [1, 1, 1]  # score exactly 0.5
    model = TrainedClassifier("logistic_regression", TrainConfig(), 0, 1,
                              weights=np.array([1.0]), bias=0.0)
    Xs = np.log(np.array([[0.4 / 0.6], [1.0], [0.6 / 0.4]]))
    assert predict(model, Xs).tolist() == [0, 1, 1]
    assert predict(model, Xs, threshold=0.0).tolist() == [1, 1, 1]
    assert predict(model, Xs, threshold=1.0).tolist() == [0, 0, 0]


def test_width_mismatch():
    X, y = blobs(30, 3)
    model = train_decision_tree(X, y)
    with pytest.raises(DataFormatError):
        predict_proba(model, np.zeros((2, 4)))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainConfig(max_features="half")
    with pytest.raises(ValueError):
        TrainConfig.for_kind("decision_tree", depth=3)
    with pytest.raises(ValueError):
        TrainConfig.for_kind("svm")
    assert TrainConfig.for_kind("extra_trees").bootstrap is False


def test_model_is_immutable():
    X, y = blobs(30, 2)
    m = train_logistic_regression(X, y, {"epochs": 5})
    with pytest.raises(ValueError):
        m.weights[0] = 1.0
    tree = train_decision_tree(X, y).trees[0]
    with pytest.raises(ValueError):
        tree.threshold[0] = 1.0


@pytest.mark.parametrize("kind", KINDS)
def test_serialization_round_trip(kind, tmp_path):
    X, y = blobs(150, 5, seed=9)
    model = train(kind, X, y, SMALL.get(kind), seed=4)
    path = save_model(model, tmp_path / f"{kind}.json", extra={"note": "x"})
    back, doc = load_model(path)
    assert doc["note"] == "x" and doc["version"] == 1
    Xq = np.random.default_rng(10).normal(0, 2, (500, 5))
    assert np.array_equal(predict_proba(model, Xq), predict_proba(back, Xq))
    assert back.config == model.config and back.seed == model.seed


def test_model_from_dict_rejects_other_documents():
    X, y = blobs(20, 2)
    d = model_to_dict(train_decision_tree(X, y))
    with pytest.raises(DataFormatError):
        model_from_dict({**d, "version": 99})
    with pytest.raises(DataFormatError):
        model_from_dict({**d, "format": "other"})
