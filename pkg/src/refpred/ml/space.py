"""Hyperparameter search spaces, frozen per algorithm."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import UnsupportedAlgorithm

ALGORITHMS = ("LR", "NB", "SVM", "DT", "RF", "NN")
NN_DEFAULT_EPOCHS = 1000


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def sample(self, rng):
        return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))

    def contains(self, value) -> bool:
        return isinstance(value, (int, float)) and self.low <= value <= self.high


@dataclass(frozen=True)
class Choice:
    values: tuple

    def sample(self, rng):
        return self.values[int(rng.integers(len(self.values)))]

    def contains(self, value) -> bool:
        return value in self.values


TREE_SPACE = {
    "max_depth": Choice(tuple(range(3, 25)) + (None,)),
    "max_features": Choice(("sqrt", "log2", "all")),
    "min_samples_split": Choice(tuple(range(2, 12))),
    "splitter": Choice(("best", "random")),
    "criterion": Choice(("gini", "entropy")),
}


def search_space(algorithm: str, nn_epochs: int = NN_DEFAULT_EPOCHS) -> dict:
    algorithm = normalize_algorithm(algorithm)
    if algorithm in ("LR", "SVM"):
        return {"C": LogUniform(1e-3, 1e3)}
    if algorithm == "NB":
        return {"var_smoothing": LogUniform(1e-12, 1e-1)}
    if algorithm == "DT":
        return dict(TREE_SPACE)
    if algorithm == "RF":
        return {**TREE_SPACE, "bootstrap": Choice((True, False)), "n_estimators": Choice(tuple(range(10, 201)))}
    # architecture, dropout and optimizer are fixed; only the epoch budget is configurable
    return {"epochs": Choice((int(nn_epochs),))}


DEFAULTS = {
    "LR": {"C": 1.0},
    "NB": {"var_smoothing": 1e-9},
    "SVM": {"C": 1.0},
    "DT": {"max_depth": None, "max_features": "all", "min_samples_split": 2, "splitter": "best", "criterion": "gini"},
    "RF": {"max_depth": None, "max_features": "sqrt", "min_samples_split": 2, "splitter": "best",
           "criterion": "gini", "bootstrap": True, "n_estimators": 100},
    "NN": {"epochs": NN_DEFAULT_EPOCHS},
}


def default_hyperparameters(algorithm: str) -> dict:
    return dict(DEFAULTS[normalize_algorithm(algorithm)])


def sample_point(space: dict, rng) -> dict:
    """One draw; parameters are sampled in sorted-name order so draws are reproducible."""
    return {name: space[name].sample(rng) for name in sorted(space)}


def normalize_algorithm(algorithm: str) -> str:
    name = str(algorithm).upper()
    if name not in ALGORITHMS:
        raise UnsupportedAlgorithm(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    return name
