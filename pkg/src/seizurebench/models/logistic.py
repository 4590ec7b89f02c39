"""L2-regularised logistic regression fitted by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


def sigmoid(z):
    """Numerically stable logistic function."""
    return np.exp(-np.logaddexp(0.0, -np.asarray(z, dtype=np.float64)))


def loss_and_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean binary cross-entropy plus ``l2/2 * ||w||^2`` and its gradient.

    The bias is not penalised.

    Returns
    -------
    loss : float
    grad_w : ndarray
    grad_b : float
    """
    z = X @ w + b
    # log(1 + e^z) - y*z is the cross-entropy written without log(sigmoid)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    err = sigmoid(z) - y
    grad_w = X.T @ err / X.shape[0] + l2 * w
    grad_b = float(err.mean())
    return loss, grad_w, grad_b


def fit_logistic(X, y, learning_rate=0.1, epochs=1000, l2=0.0):
    """Gradient descent from zero weights for a fixed number of epochs.

    Raises
    ------
    TrainingError
        If the loss becomes non-finite (learning rate too large).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.zeros(X.shape[1])
    b = 0.0
    for epoch in range(epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            loss, gw, gb = loss_and_grad(w, b, X, y, l2)
        if not np.isfinite(loss):
            raise TrainingError(f"logistic regression diverged at epoch {epoch} (loss={loss})")
        w = w - learning_rate * gw
        b = b - learning_rate * gb
    if not (np.all(np.isfinite(w)) and np.isfinite(b)):
        raise TrainingError("logistic regression produced non-finite weights")
    return w, b
