"""Feed-forward network: dense 128 -> 64 -> 1 with ReLU, dropout and a logistic output."""

from __future__ import annotations

import numpy as np

from .linear import sigmoid, softplus

HIDDEN = (128, 64)
KEEP_PROB = 0.8
LEARNING_RATE = 1e-3
BATCH_SIZE = 32
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


def init_params(n_in: int, rng, hidden=HIDDEN) -> dict:
    """Glorot-uniform weights, zero biases."""
    sizes = (n_in, *hidden, 1)
    params = {}
    for i in range(len(sizes) - 1):
        limit = np.sqrt(6.0 / (sizes[i] + sizes[i + 1]))
        params[f"W{i + 1}"] = rng.uniform(-limit, limit, size=(sizes[i], sizes[i + 1]))
        params[f"b{i + 1}"] = np.zeros(sizes[i + 1])
    return params


def forward(params: dict, X, masks=None):
    """Returns logits and the cache needed for backprop.

    ``masks`` are inverted-dropout multipliers for the two hidden layers
    (already divided by the keep probability); None disables dropout.
    """
    z1 = X @ params["W1"] + params["b1"]
    a1 = np.maximum(z1, 0.0)
    if masks is not None:
        a1 = a1 * masks[0]
    z2 = a1 @ params["W2"] + params["b2"]
    a2 = np.maximum(z2, 0.0)
    if masks is not None:
        a2 = a2 * masks[1]
    logits = (a2 @ params["W3"] + params["b3"])[:, 0]
    return logits, (X, z1, a1, z2, a2)


def nn_loss(params: dict, X, y, masks=None) -> float:
    """Mean binary cross-entropy."""
    logits, _ = forward(params, X, masks)
    return float(np.mean(softplus(logits) - y * logits))


def nn_grad(params: dict, X, y, masks=None) -> dict:
    logits, (X, z1, a1, z2, a2) = forward(params, X, masks)
    n = len(y)
    d3 = ((sigmoid(logits) - y) / n)[:, None]
    grads = {"W3": a2.T @ d3, "b3": d3.sum(axis=0)}
    d2 = d3 @ params["W3"].T
    if masks is not None:
        d2 = d2 * masks[1]
    d2 = d2 * (z2 > 0)
    grads["W2"] = a1.T @ d2
    grads["b2"] = d2.sum(axis=0)
    d1 = d2 @ params["W2"].T
    if masks is not None:
        d1 = d1 * masks[0]
    d1 = d1 * (z1 > 0)
    grads["W1"] = X.T @ d1
    grads["b1"] = d1.sum(axis=0)
    return grads


def dropout_masks(n: int, rng, keep: float = KEEP_PROB, hidden=HIDDEN):
    return [(rng.random((n, h)) < keep) / keep for h in hidden]


def fit_network(X, y, epochs: int, seed: int, keep: float = KEEP_PROB) -> dict:
    """Mini-batch Adam on the cross-entropy for a fixed number of epochs."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    params = init_params(X.shape[1], rng)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    beta1, beta2 = ADAM_BETAS
    step = 0
    for _ in range(epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), BATCH_SIZE):
            batch = order[start:start + BATCH_SIZE]
            masks = dropout_masks(len(batch), rng, keep)
            grads = nn_grad(params, X[batch], y[batch], masks)
            step += 1
            for k in PARAM_NAMES:
                m[k] = beta1 * m[k] + (1 - beta1) * grads[k]
                v[k] = beta2 * v[k] + (1 - beta2) * grads[k] ** 2
                m_hat = m[k] / (1 - beta1 ** step)
                v_hat = v[k] / (1 - beta2 ** step)
                params[k] = params[k] - LEARNING_RATE * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return params


def network_proba(params: dict, X) -> np.ndarray:
    logits, _ = forward(params, np.asarray(X, dtype=float))
    return sigmoid(logits)
