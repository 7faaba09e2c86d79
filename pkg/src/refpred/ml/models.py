"""Trained-model container plus the fit / predict / importance entry points."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import CatalogMismatch, NonBinaryLabels, SingleClass, UnsupportedAlgorithm
from . import bayes, linear, neural, tree
from .scaling import ScalerParams, check_scaled
from .space import default_hyperparameters, normalize_algorithm

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainedModel:
    algorithm: str
    hyperparameters: dict
    params: dict
    seed: int
    n_features: int
    scaler: ScalerParams | None = None
    catalog_hash: str = ""
    level: str = ""
    refactoring: str = ""
    feature_names: tuple[str, ...] = field(default=(), repr=False)

    def with_context(self, **changes) -> "TrainedModel":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "algorithm": self.algorithm,
            "hyperparameters": self.hyperparameters,
            "seed": self.seed,
            "n_features": self.n_features,
            "scaler": self.scaler.to_dict() if self.scaler else None,
            "catalog_hash": self.catalog_hash,
            "level": self.level,
            "refactoring": self.refactoring,
            "feature_names": list(self.feature_names),
            "params": _encode(self.params),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedModel":
        return cls(
            algorithm=data["algorithm"],
            hyperparameters=dict(data["hyperparameters"]),
            params=_decode(data["params"]),
            seed=int(data["seed"]),
            n_features=int(data["n_features"]),
            scaler=ScalerParams.from_dict(data["scaler"]) if data.get("scaler") else None,
            catalog_hash=data.get("catalog_hash", ""),
            level=data.get("level", ""),
            refactoring=data.get("refactoring", ""),
            feature_names=tuple(data.get("feature_names", ())),
        )


def _encode(value):
    if isinstance(value, np.ndarray):
        return {"__array__": value.tolist(), "dtype": str(value.dtype)}
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def _decode(value):
    if isinstance(value, dict):
        if "__array__" in value:
            return np.array(value["__array__"], dtype=value["dtype"])
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def save_model(model: TrainedModel, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(model.to_dict(), sort_keys=True))
    tmp.replace(path)


def load_model(path, expected_catalog_hash: str | None = None) -> TrainedModel:
    model = TrainedModel.from_dict(json.loads(Path(path).read_text()))
    if expected_catalog_hash is not None and model.catalog_hash != expected_catalog_hash:
        raise CatalogMismatch(
            f"model {Path(path).name} was trained on catalog {model.catalog_hash[:12]}, "
            f"dataset uses {expected_catalog_hash[:12]}"
        )
    return model


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    values = set(np.unique(y).tolist())
    if not values <= {0, 1, True, False}:
        raise NonBinaryLabels(f"labels must be binary, got {sorted(values)}")
    y = y.astype(int)
    if len(set(y.tolist())) < 2:
        raise SingleClass("training data holds a single class")
    return y


def _tree_params(hp: dict) -> tree.TreeParams:
    return tree.TreeParams(
        max_depth=hp.get("max_depth"),
        max_features=hp.get("max_features"),
        min_samples_split=int(hp.get("min_samples_split", 2)),
        splitter=hp.get("splitter", "best"),
        criterion=hp.get("criterion", "gini"),
    )


def fit(algorithm: str, hyperparameters: dict | None, X, y, seed: int = 0) -> TrainedModel:
    """Fit one of LR, NB, SVM, DT, RF, NN on scaled features."""
    algorithm = normalize_algorithm(algorithm)
    hp = default_hyperparameters(algorithm)
    hp.update(hyperparameters or {})
    X = np.asarray(X, dtype=float)
    y = _check_labels(y)
    check_scaled(X)

    if algorithm == "LR":
        params = {"coef": linear.fit_logistic(X, y, float(hp["C"]))}
    elif algorithm == "NB":
        params = bayes.fit_gaussian_nb(X, y, float(hp["var_smoothing"]))
    elif algorithm == "SVM":
        coef = linear.fit_linear_svm(X, y, float(hp["C"]), seed)
        scores = X @ coef[:-1] + coef[-1]
        a, b = linear.fit_platt(scores, y)
        params = {"coef": coef, "platt": np.array([a, b])}
    elif algorithm == "DT":
        rng = np.random.default_rng(tree.tree_seed(seed, 0))
        params = {"tree": tree.grow_tree(X, y, _tree_params(hp), rng)}
    elif algorithm == "RF":
        trees = tree.grow_forest(X, y, _tree_params(hp), int(hp["n_estimators"]), bool(hp["bootstrap"]), seed)
        params = {"trees": trees}
    else:
        params = neural.fit_network(X, y, int(hp["epochs"]), seed)
    _freeze(params)
    return TrainedModel(algorithm, hp, params, int(seed), X.shape[1])


def _freeze(value):
    if isinstance(value, np.ndarray):
        value.setflags(write=False)
    elif isinstance(value, dict):
        for v in value.values():
            _freeze(v)
    elif isinstance(value, list):
        for v in value:
            _freeze(v)


def _prepare(model: TrainedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise CatalogMismatch(f"model expects {model.n_features} features, got {X.shape[-1]}")
    return model.scaler.transform(X) if model.scaler is not None else X


def decision_scores(model: TrainedModel, X) -> np.ndarray:
    """Raw linear scores for LR and SVM."""
    if model.algorithm not in ("LR", "SVM"):
        raise UnsupportedAlgorithm(f"{model.algorithm} has no linear decision function")
    coef = model.params["coef"]
    return _prepare(model, X) @ coef[:-1] + coef[-1]


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    """Probability of the positive class for each row.

    Raw features are scaled with the model's stored scaler when it has one.
    """
    Xs = _prepare(model, X)
    algo, p = model.algorithm, model.params
    if algo == "LR":
        return linear.sigmoid(Xs @ p["coef"][:-1] + p["coef"][-1])
    if algo == "SVM":
        a, b = p["platt"]
        return linear.sigmoid(a * (Xs @ p["coef"][:-1] + p["coef"][-1]) + b)
    if algo == "NB":
        return bayes.nb_posterior(p, Xs)[:, 1]
    if algo == "DT":
        return tree.tree_proba(p["tree"], Xs)
    if algo == "RF":
        return tree.forest_votes(p["trees"], Xs)
    return neural.network_proba(p, Xs)


def predict(model: TrainedModel, X) -> np.ndarray:
    if model.algorithm == "SVM":
        # the class is the side of the hyperplane; calibration only ranks
        return (decision_scores(model, X) > 0).astype(int)
    return (predict_proba(model, X) > 0.5).astype(int)


def feature_importance(model: TrainedModel) -> np.ndarray:
    """|coefficients| for LR/SVM, normalized impurity decrease for DT/RF."""
    algo = model.algorithm
    if algo in ("LR", "SVM"):
        return np.abs(np.asarray(model.params["coef"][:-1], dtype=float))
    if algo == "DT":
        return tree.tree_importance(model.params["tree"])
    if algo == "RF":
        return tree.forest_importance(model.params["trees"])
    raise UnsupportedAlgorithm(f"feature importance is not extracted for {algo}")
