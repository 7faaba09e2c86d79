"""CART decision trees and random forests for binary labels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TIE_TOL = 1e-12
LEAF = -1


def impurity(pos: np.ndarray, n: np.ndarray, criterion: str) -> np.ndarray:
    """Gini or entropy of nodes holding ``pos`` positives out of ``n`` rows."""
    n = np.asarray(n, dtype=float)
    p = np.divide(pos, n, out=np.zeros_like(n), where=n > 0)
    if criterion == "gini":
        return 2.0 * p * (1.0 - p)
    if criterion == "entropy":
        q = 1.0 - p
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
        return h
    raise ValueError(f"unknown criterion {criterion!r}")


def node_impurity(pos: float, n: int, criterion: str) -> float:
    """Scalar form of ``impurity`` for a single node."""
    if n <= 0:
        return 0.0
    p = pos / n
    if criterion == "gini":
        return 2.0 * p * (1.0 - p)
    if criterion == "entropy":
        q = 1.0 - p
        return -((p * math.log2(p) if p > 0 else 0.0) + (q * math.log2(q) if q > 0 else 0.0))
    raise ValueError(f"unknown criterion {criterion!r}")


def n_candidate_features(max_features, d: int) -> int:
    if max_features in (None, "all"):
        return d
    if max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    if max_features == "log2":
        return max(1, int(math.log2(d))) if d > 1 else 1
    if isinstance(max_features, float):
        return max(1, int(max_features * d))
    return max(1, min(d, int(max_features)))


def split_scores(x: np.ndarray, y: np.ndarray, criterion: str):
    """Weighted child impurity for every midpoint between distinct sorted values of ``x``.

    Returns (thresholds, scores) with thresholds ascending.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    n = len(xs)
    cut = np.flatnonzero(xs[:-1] < xs[1:])
    if len(cut) == 0:
        return np.empty(0), np.empty(0)
    left_pos = np.cumsum(ys)[cut]
    left_n = cut + 1
    right_pos = ys.sum() - left_pos
    right_n = n - left_n
    scores = (left_n * impurity(left_pos, left_n, criterion) + right_n * impurity(right_pos, right_n, criterion)) / n
    thresholds = (xs[cut] + xs[cut + 1]) / 2.0
    # guard against the midpoint rounding up onto the right-hand value
    thresholds = np.where(thresholds >= xs[cut + 1], xs[cut], thresholds)
    return thresholds, scores


def best_split(X, y, features, criterion: str):
    """Lowest-score split; ties within TIE_TOL go to the lowest feature, then lowest threshold.

    Returns (feature, threshold, score) or None when no feature varies.
    """
    per_feature = []
    for f in sorted(int(f) for f in features):
        thresholds, scores = split_scores(X[:, f], y, criterion)
        if len(scores):
            per_feature.append((f, thresholds, scores))
    if not per_feature:
        return None
    lowest = min(float(s.min()) for _, _, s in per_feature)
    for f, thresholds, scores in per_feature:
        hits = np.flatnonzero(scores <= lowest + TIE_TOL)
        if len(hits):
            i = hits[0]
            return f, float(thresholds[i]), float(scores[i])
    return None


def random_split(X, y, features, criterion: str, rng):
    """One uniform threshold per candidate feature; keep the best (ties as in ``best_split``)."""
    candidates = []
    for f in sorted(int(f) for f in features):
        col = X[:, f]
        lo, hi = col.min(), col.max()
        if lo >= hi:
            continue
        t = float(rng.uniform(lo, hi))
        if t >= hi:
            t = float(lo)
        left = col <= t
        nl = int(left.sum())
        nr = len(col) - nl
        pos_l = float(y[left].sum())
        pos_r = float(y.sum()) - pos_l
        score = (nl * node_impurity(pos_l, nl, criterion) + nr * node_impurity(pos_r, nr, criterion)) / len(col)
        candidates.append((f, t, float(score)))
    if not candidates:
        return None
    lowest = min(c[2] for c in candidates)
    for c in candidates:
        if c[2] <= lowest + TIE_TOL:
            return c
    return None


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    max_features: object = None
    min_samples_split: int = 2
    splitter: str = "best"
    criterion: str = "gini"


def grow_tree(X, y, params: TreeParams, rng) -> dict:
    """Grow a tree depth-first; nodes are stored in pre-order as parallel arrays."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n_total, d = X.shape
    k = n_candidate_features(params.max_features, d)
    feature, threshold, left, right, value, imp, count = [], [], [], [], [], [], []

    def new_node(idx):
        pos = y[idx].sum()
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(pos / len(idx)))
        imp.append(node_impurity(float(pos), len(idx), params.criterion))
        count.append(len(idx))
        return len(feature) - 1

    # explicit stack instead of recursion so deep trees cannot overflow
    stack = [(np.arange(n_total), 0, LEAF, None)]
    while stack:
        idx, depth, parent, side = stack.pop()
        node = new_node(idx)
        if parent != LEAF:
            (left if side == "L" else right)[parent] = node
        if (
            imp[node] <= 0.0
            or len(idx) < params.min_samples_split
            or (params.max_depth is not None and depth >= params.max_depth)
        ):
            continue
        features = np.arange(d) if k >= d else rng.choice(d, size=k, replace=False)
        Xn, yn = X[idx], y[idx]
        if params.splitter == "best":
            found = best_split(Xn, yn, features, params.criterion)
        elif params.splitter == "random":
            found = random_split(Xn, yn, features, params.criterion, rng)
        else:
            raise ValueError(f"unknown splitter {params.splitter!r}")
        if found is None:
            continue
        f, t, _ = found
        mask = Xn[:, f] <= t
        feature[node] = f
        threshold[node] = t
        stack.append((idx[~mask], depth + 1, node, "R"))
        stack.append((idx[mask], depth + 1, node, "L"))

    return {
        "feature": np.array(feature, dtype=int),
        "threshold": np.array(threshold),
        "left": np.array(left, dtype=int),
        "right": np.array(right, dtype=int),
        "value": np.array(value),
        "impurity": np.array(imp),
        "n_samples": np.array(count, dtype=int),
        "n_features": d,
    }


def tree_apply(tree: dict, X) -> np.ndarray:
    """Leaf index reached by each row."""
    X = np.asarray(X, dtype=float)
    node = np.zeros(len(X), dtype=int)
    feature, threshold, left, right = tree["feature"], tree["threshold"], tree["left"], tree["right"]
    active = feature[node] != LEAF
    while active.any():
        rows = np.flatnonzero(active)
        cur = node[rows]
        go_left = X[rows, feature[cur]] <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
        active = feature[node] != LEAF
    return node


def tree_proba(tree: dict, X) -> np.ndarray:
    return tree["value"][tree_apply(tree, X)]


def tree_importance(tree: dict) -> np.ndarray:
    """Weighted impurity decrease per feature, normalized to sum 1 (all zeros for a stump leaf)."""
    out = np.zeros(tree["n_features"])
    n = tree["n_samples"]
    for i, f in enumerate(tree["feature"]):
        if f == LEAF:
            continue
        l, r = tree["left"][i], tree["right"][i]
        out[f] += n[i] * tree["impurity"][i] - n[l] * tree["impurity"][l] - n[r] * tree["impurity"][r]
    out = np.maximum(out, 0.0)
    total = out.sum()
    return out / total if total > 0 else out


def tree_seed(seed: int, index: int) -> int:
    return int(seed) + int(index)


def grow_forest(X, y, params: TreeParams, n_estimators: int, bootstrap: bool, seed: int) -> list[dict]:
    """Tree ``i`` draws its bootstrap sample and features from its own generator seeded ``seed + i``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    trees = []
    for i in range(n_estimators):
        rng = np.random.default_rng(tree_seed(seed, i))
        if bootstrap:
            idx = rng.integers(0, len(y), size=len(y))
            trees.append(grow_tree(X[idx], y[idx], params, rng))
        else:
            trees.append(grow_tree(X, y, params, rng))
    return trees


def forest_votes(trees: list[dict], X) -> np.ndarray:
    """Fraction of trees voting for the positive class."""
    votes = np.zeros(len(X))
    for tree in trees:
        votes += tree_proba(tree, X) > 0.5
    return votes / len(trees)


def forest_importance(trees: list[dict]) -> np.ndarray:
    total = np.sum([tree_importance(t) for t in trees], axis=0)
    s = total.sum()
    return total / s if s > 0 else total
