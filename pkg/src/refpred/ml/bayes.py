"""Gaussian naive Bayes."""

from __future__ import annotations

import numpy as np


def fit_gaussian_nb(X, y, var_smoothing: float) -> dict:
    """Per-class means, smoothed variances and priors.

    The smoothing term is ``var_smoothing`` times the largest feature
    variance over all rows (or ``var_smoothing`` itself when every feature is
    constant, so variances stay positive).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    top = float(X.var(axis=0).max()) if X.size else 0.0
    epsilon = var_smoothing * top if top > 0 else var_smoothing
    means, variances, priors = [], [], []
    for label in (0, 1):
        rows = X[y == label]
        means.append(rows.mean(axis=0))
        variances.append(rows.var(axis=0) + epsilon)
        priors.append(len(rows) / len(y))
    return {
        "means": np.array(means),
        "variances": np.array(variances),
        "priors": np.array(priors),
        "epsilon": epsilon,
    }


def joint_log_likelihood(params: dict, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = []
    for c in range(2):
        mu = params["means"][c]
        var = params["variances"][c]
        ll = -0.5 * np.sum(np.log(2.0 * np.pi * var)) - 0.5 * np.sum((X - mu) ** 2 / var, axis=1)
        out.append(np.log(params["priors"][c]) + ll)
    return np.column_stack(out)


def nb_posterior(params: dict, X) -> np.ndarray:
    """Posterior over (class 0, class 1) for each row."""
    jll = joint_log_likelihood(params, X)
    norm = np.logaddexp(jll[:, 0], jll[:, 1])
    return np.exp(jll - norm[:, None])
