"""Under-sampling of the majority class."""

from __future__ import annotations

import numpy as np

from ..errors import NonBinaryLabels, SingleClass

NEAR_MISS_NEIGHBOURS = 3


def _split_classes(y):
    y = np.asarray(y)
    values = set(np.unique(y).tolist())
    if not values <= {0, 1}:
        raise NonBinaryLabels(f"labels must be 0/1, got {sorted(values)}")
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise SingleClass("both classes must be present to under-sample")
    if len(pos) <= len(neg):
        return pos, neg
    return neg, pos


def random_undersample(X, y, seed: int):
    """Keep the minority class whole and a uniform random subset of the majority.

    Rows keep their original relative order.
    """
    X = np.asarray(X)
    y = np.asarray(y)
    minority, majority = _split_classes(y)
    if len(minority) == len(majority):
        return X.copy(), y.copy()
    rng = np.random.default_rng(seed)
    kept = rng.choice(majority, size=len(minority), replace=False)
    idx = np.sort(np.concatenate([minority, kept]))
    return X[idx], y[idx]


def near_miss_distances(X_major, X_minor, n_neighbours: int = NEAR_MISS_NEIGHBOURS, chunk: int = 2048):
    """Mean Euclidean distance from each majority row to its nearest minority rows."""
    n = min(n_neighbours, len(X_minor))
    out = np.empty(len(X_major))
    minor_sq = (X_minor ** 2).sum(axis=1)
    for start in range(0, len(X_major), chunk):
        block = X_major[start:start + chunk]
        sq = (block ** 2).sum(axis=1)[:, None] + minor_sq[None, :] - 2.0 * block @ X_minor.T
        d = np.sqrt(np.maximum(sq, 0.0))
        nearest = np.partition(d, n - 1, axis=1)[:, :n]
        out[start:start + chunk] = nearest.mean(axis=1)
    return out


def near_miss_undersample(X, y):
    """NearMiss-1: keep the majority rows closest on average to their 3 nearest minority rows.

    Ties are broken by original row order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    minority, majority = _split_classes(y)
    if len(minority) == len(majority):
        return X.copy(), y.copy()
    dist = near_miss_distances(X[majority], X[minority])
    order = np.argsort(dist, kind="stable")[: len(minority)]
    idx = np.sort(np.concatenate([minority, majority[order]]))
    return X[idx], y[idx]
