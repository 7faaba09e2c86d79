"""Logistic regression and a linear SVM with logistic calibration."""

from __future__ import annotations

import numpy as np

LR_TOL = 1e-8
LR_MAX_ITER = 200
SVM_TOL = 1e-6
SVM_MAX_EPOCHS = 1000


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softplus(z):
    return np.logaddexp(0.0, z)


def lr_loss(params, X, y, C: float) -> float:
    """C * sum of logistic losses + 0.5 * ||w||^2; the last entry of ``params`` is the unpenalised bias."""
    w, b = params[:-1], params[-1]
    z = X @ w + b
    return float(C * np.sum(softplus(z) - y * z) + 0.5 * w @ w)


def lr_grad(params, X, y, C: float) -> np.ndarray:
    w, b = params[:-1], params[-1]
    r = sigmoid(X @ w + b) - y
    return np.concatenate([C * (X.T @ r) + w, [C * r.sum()]])


def fit_logistic(X, y, C: float, tol: float = LR_TOL, max_iter: int = LR_MAX_ITER) -> np.ndarray:
    """Newton's method with backtracking; returns [w..., b]."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    params = np.zeros(d + 1)
    reg = np.ones(d + 1)
    reg[-1] = 0.0
    loss = lr_loss(params, X, y, C)
    for _ in range(max_iter):
        g = lr_grad(params, X, y, C)
        if np.linalg.norm(g) <= tol * max(1.0, C * n):
            break
        p = sigmoid(Xb @ params)
        H = C * (Xb.T * (p * (1 - p))) @ Xb + np.diag(reg) + 1e-10 * np.eye(d + 1)
        step = np.linalg.solve(H, g)
        t = 1.0
        while True:
            cand = params - t * step
            cand_loss = lr_loss(cand, X, y, C)
            if cand_loss <= loss - 1e-4 * t * (g @ step) or t < 1e-10:
                break
            t *= 0.5
        if loss - cand_loss <= 1e-15 * max(1.0, abs(loss)):
            params = cand
            break
        params, loss = cand, cand_loss
    return params


def fit_platt(scores, y, max_iter: int = 100) -> tuple[float, float]:
    """Fit P(y=1|s) = sigmoid(a*s + b) with Platt's smoothed targets."""
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(y)
    n_pos = int((y == 1).sum())
    n_neg = len(y) - n_pos
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a, b = 0.0, float(np.log((n_pos + 1.0) / (n_neg + 1.0)))

    def nll(a_, b_):
        z = a_ * scores + b_
        return float(np.sum(softplus(z) - t * z))

    loss = nll(a, b)
    for _ in range(max_iter):
        p = sigmoid(a * scores + b)
        r = p - t
        g = np.array([r @ scores, r.sum()])
        if np.abs(g).max() < 1e-10:
            break
        w = p * (1 - p)
        H = np.array([[w @ (scores * scores), w @ scores], [w @ scores, w.sum()]]) + 1e-12 * np.eye(2)
        step = np.linalg.solve(H, g)
        s = 1.0
        while s > 1e-10:
            na, nb = a - s * step[0], b - s * step[1]
            new = nll(na, nb)
            if new <= loss:
                break
            s *= 0.5
        else:
            break
        if loss - new <= 1e-14 * max(1.0, abs(loss)):
            a, b = na, nb
            break
        a, b, loss = na, nb, new
    return float(a), float(b)


def fit_linear_svm(X, y, C: float, seed: int, tol: float = SVM_TOL, max_epochs: int = SVM_MAX_EPOCHS) -> np.ndarray:
    """Dual coordinate descent on 0.5*||w||^2 + C * sum hinge, bias as a constant feature.

    Returns [w..., b].
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    s = np.where(np.asarray(y) == 1, 1.0, -1.0)
    q = (Xb * Xb).sum(axis=1)
    alpha = np.zeros(n)
    w = np.zeros(d + 1)
    rng = np.random.default_rng(seed)
    for _ in range(max_epochs):
        worst = 0.0
        for i in rng.permutation(n):
            g = s[i] * (w @ Xb[i]) - 1.0
            if alpha[i] == 0.0:
                pg = min(g, 0.0)
            elif alpha[i] == C:
                pg = max(g, 0.0)
            else:
                pg = g
            worst = max(worst, abs(pg))
            if pg != 0.0 and q[i] > 0:
                old = alpha[i]
                alpha[i] = min(max(old - g / q[i], 0.0), C)
                w += (alpha[i] - old) * s[i] * Xb[i]
        if worst < tol:
            break
    return w
