"""Training protocol and evaluation: balance, scale, search, cross-validate, report."""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import catalog_by_hash
from .errors import CatalogMismatch, ClassTooSmall, DegenerateSplit, RefpredError
from .ml import models as ml
from .ml.sampling import near_miss_undersample, random_undersample
from .ml.scaling import NotScaledWarning, fit_scaler
from .ml.space import normalize_algorithm, sample_point, search_space
from .store import TrainingTable, build_training_table, read_manifest
from .taxonomy import ElementLevel, RefactoringType

log = logging.getLogger(__name__)

CROSS_DATASET_STEPS = (
    "load model",
    "build table from other dataset",
    "under-sample",
    "scale with stored parameters",
    "predict and score",
)
SLOW_ALGORITHMS = ("SVM", "NN")


class TimestampTieWarning(UserWarning):
    """Every row shares one timestamp, so the time split falls back to stored order."""


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 100
    folds: int = 10
    seed: int = 0
    undersampler: str = "random"
    paper_exact_scaling: bool = False
    nn_epochs: int = 1000

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.undersampler not in ("random", "nearmiss"):
            raise ValueError(f"unknown under-sampler {self.undersampler!r}")

    @classmethod
    def for_algorithm(cls, algorithm: str, **overrides) -> "SearchConfig":
        """Default budget: 100 iterations / 10 folds, or 10 / 5 for SVM and NN."""
        if normalize_algorithm(algorithm) in SLOW_ALGORITHMS:
            overrides.setdefault("iterations", 10)
            overrides.setdefault("folds", 5)
        return cls(**overrides)


@dataclass(frozen=True)
class FoldResult:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def accuracy(self) -> float:
        total = self.tp + self.fp + self.tn + self.fn
        return (self.tp + self.tn) / total if total else 0.0

    def to_dict(self) -> dict:
        return {
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "precision": self.precision,
            "recall": self.recall,
            "accuracy": self.accuracy,
        }


def confusion(y_true, y_pred) -> FoldResult:
    y_true = np.asarray(y_true).astype(int)
    y_pred = np.asarray(y_pred).astype(int)
    return FoldResult(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
    )


@dataclass
class EvaluationReport:
    algorithm: str
    refactoring: str
    dataset: str
    folds: list[FoldResult]
    best_hyperparameters: dict = field(default_factory=dict)
    kind: str = "cross-validation"
    details: dict = field(default_factory=dict)

    @property
    def means(self) -> dict:
        if not self.folds:
            return {"precision": 0.0, "recall": 0.0, "accuracy": 0.0}
        return {
            name: float(np.mean([getattr(f, name) for f in self.folds]))
            for name in ("precision", "recall", "accuracy")
        }

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "refactoring": self.refactoring,
            "dataset": self.dataset,
            "kind": self.kind,
            "best_hyperparameters": self.best_hyperparameters,
            "folds": [f.to_dict() for f in self.folds],
            "means": self.means,
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())


def stratified_folds(y, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle each class, then deal its rows round-robin across the folds.

    Each class continues dealing where the previous one stopped, so fold
    sizes differ by at most one as well.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(y), dtype=int)
    offset = 0
    for label in np.unique(y):
        idx = np.flatnonzero(y == label)
        if len(idx) < k:
            raise ClassTooSmall(f"class {label} has {len(idx)} rows, fewer than {k} folds")
        idx = rng.permutation(idx)
        assignment[idx] = (offset + np.arange(len(idx))) % k
        offset = (offset + len(idx)) % k
    return [np.flatnonzero(assignment == f) for f in range(k)]


def undersample(X, y, method: str, seed: int):
    if method == "nearmiss":
        return near_miss_undersample(X, y)
    return random_undersample(X, y, seed)


def cross_validate(X, y, algorithm: str, hyperparameters: dict, folds: list[np.ndarray], seed: int,
                   prescaled: bool = False) -> list[FoldResult]:
    """Fit on k-1 folds and score the held-out fold; the scaler sees training rows only."""
    results = []
    for f, test in enumerate(folds):
        train = np.concatenate([folds[j] for j in range(len(folds)) if j != f])
        if prescaled:
            Xtr, Xte = X[train], X[test]
        else:
            scaler = fit_scaler(X[train])
            Xtr, Xte = scaler.transform(X[train]), scaler.transform(X[test])
        with warnings.catch_warnings():
            # held-out rows may legitimately fall outside the training range
            warnings.simplefilter("ignore", NotScaledWarning)
            model = ml.fit(algorithm, hyperparameters, Xtr, y[train], seed)
            pred = ml.predict(model, Xte)
        results.append(confusion(y[test], pred))
    return results


def random_search(X, y, algorithm: str, config: SearchConfig, prescaled: bool = False):
    """Sample ``config.iterations`` points and keep the best mean CV accuracy.

    Ties go to the earliest sample. Returns (best hyperparameters, log); a
    sample whose fit fails is logged with ``score`` None and skipped.
    """
    algorithm = normalize_algorithm(algorithm)
    space = search_space(algorithm, config.nn_epochs)
    rng = np.random.default_rng(config.seed)
    folds = stratified_folds(y, config.folds, config.seed)
    entries = []
    best, best_score = None, -np.inf
    for i in range(config.iterations):
        point = sample_point(space, rng)
        entry = {"index": i, "hyperparameters": point}
        try:
            results = cross_validate(X, y, algorithm, point, folds, config.seed, prescaled)
        except RefpredError as exc:
            log.warning("search sample %d failed: %s", i, exc)
            entry["score"] = None
            entry["error"] = str(exc)
        else:
            score = float(np.mean([r.accuracy for r in results]))
            entry["score"] = score
            if score > best_score:
                best, best_score = point, score
        entries.append(entry)
    if best is None:
        raise RefpredError(f"every {algorithm} search sample failed")
    return best, entries


def _table(source, refactoring) -> TrainingTable:
    if isinstance(source, TrainingTable):
        return source
    return build_training_table(source, refactoring)


def train_and_evaluate(source, refactoring: RefactoringType | None, algorithm: str, config: SearchConfig | None = None):
    """Merge, under-sample, scale, search and cross-validate; returns (model, report).

    ``source`` is a dataset directory or a ready ``TrainingTable``. The final
    model is fit on all balanced rows with its own scaler.
    """
    algorithm = normalize_algorithm(algorithm)
    config = config or SearchConfig.for_algorithm(algorithm)
    table = _table(source, refactoring)
    X, y = undersample(table.X, table.y, config.undersampler, config.seed)
    prescaled = config.paper_exact_scaling
    if prescaled:
        X = fit_scaler(X).transform(X)

    best, search_log = random_search(X, y, algorithm, config, prescaled)
    folds = stratified_folds(y, config.folds, config.seed)
    results = cross_validate(X, y, algorithm, best, folds, config.seed, prescaled)

    scaler = fit_scaler(X)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = ml.fit(algorithm, best, scaler.transform(X), y, config.seed)
    model = model.with_context(
        # the stored scaler maps raw features; with paper-exact scaling X is already scaled once
        scaler=None if prescaled else scaler,
        catalog_hash=table.catalog_hash,
        level=table.refactoring.level.value,
        refactoring=table.refactoring.name,
        feature_names=tuple(table.feature_names),
    )
    report = EvaluationReport(
        algorithm=algorithm,
        refactoring=table.refactoring.name,
        dataset=table.source,
        folds=results,
        best_hyperparameters=best,
        details={
            "positives": table.positives,
            "negatives": table.negatives,
            "balanced_per_class": int(y.sum()),
            "undersampler": config.undersampler,
            "iterations": config.iterations,
            "n_folds": config.folds,
            "seed": config.seed,
            "paper_exact_scaling": prescaled,
            "search_log": search_log,
        },
    )
    return model, report


def cross_dataset_evaluate(model, other, seed: int = 0, undersampler: str = "random") -> EvaluationReport:
    """Score a trained model on another dataset with the model's own scaler."""
    if not isinstance(model, ml.TrainedModel):
        model = ml.load_model(model)
    refactoring = RefactoringType[model.refactoring]
    if isinstance(other, TrainingTable):
        table = other
    else:
        manifest = read_manifest(other)
        level = refactoring.level
        if manifest.catalog_hashes.get(level.value) != model.catalog_hash:
            raise CatalogMismatch(
                f"model catalog {model.catalog_hash[:12]} does not match "
                f"{Path(other).name} ({str(manifest.catalog_hashes.get(level.value))[:12]})"
            )
        table = build_training_table(other, refactoring)
    if table.catalog_hash != model.catalog_hash:
        raise CatalogMismatch("model and table use different feature catalogs")
    X, y = undersample(table.X, table.y, undersampler, seed)
    pred = ml.predict(model, X)
    return EvaluationReport(
        algorithm=model.algorithm,
        refactoring=model.refactoring,
        dataset=table.source,
        folds=[confusion(y, pred)],
        best_hyperparameters=dict(model.hyperparameters),
        kind="cross-dataset",
        details={"steps": list(CROSS_DATASET_STEPS), "rows": int(len(y)), "seed": seed},
    )


def time_ordered_split(timestamps, fraction: float):
    """Indices of the earliest ``fraction`` of rows and of the rest (stable on ties)."""
    ts = np.asarray(timestamps)
    n = len(ts)
    order = np.argsort(ts, kind="stable")
    n_train = int(fraction * n + 1e-9)
    if n_train <= 0 or n_train >= n:
        raise DegenerateSplit(f"fraction {fraction} of {n} rows leaves an empty side")
    if n and np.all(ts == ts[0]):
        warnings.warn("all timestamps are equal; splitting in stored order", TimestampTieWarning, stacklevel=2)
    return order[:n_train], order[n_train:]


def ordered_split_evaluate(source, refactoring: RefactoringType | None, algorithm: str, fraction: float = 0.9,
                           hyperparameters: dict | None = None, seed: int = 0,
                           undersampler: str = "random") -> EvaluationReport:
    """Train on the earliest rows, test on the latest ones.

    The training side is balanced and scaled as usual; the test side is
    scored as-is with the training scaler.
    """
    algorithm = normalize_algorithm(algorithm)
    table = _table(source, refactoring)
    train, test = time_ordered_split(table.timestamps, fraction)
    Xtr, ytr = undersample(table.X[train], table.y[train], undersampler, seed)
    scaler = fit_scaler(Xtr)
    model = ml.fit(algorithm, hyperparameters, scaler.transform(Xtr), ytr, seed)
    model = model.with_context(scaler=scaler, catalog_hash=table.catalog_hash)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pred = ml.predict(model, table.X[test])
    return EvaluationReport(
        algorithm=algorithm,
        refactoring=table.refactoring.name,
        dataset=table.source,
        folds=[confusion(table.y[test], pred)],
        best_hyperparameters=dict(model.hyperparameters),
        kind="time-ordered",
        details={"fraction": fraction, "train_rows": int(len(train)), "test_rows": int(len(test)), "seed": seed},
    )


TOP_KS = (1, 5, 10)


@dataclass
class ImportanceTable:
    """Per level: feature -> [top-1, top-5, top-10] appearance counts."""

    counts: dict[str, dict[str, list[int]]]
    models: dict[str, int]

    def never_appearing(self, level: str) -> list[str]:
        return [f for f, c in self.counts.get(level, {}).items() if c[-1] == 0]

    def rows(self):
        for level in sorted(self.counts):
            for feature, c in self.counts[level].items():
                yield level, feature, c[0], c[1], c[2]

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["level", "feature", "top1", "top5", "top10", "never"])
            for level, feature, t1, t5, t10 in self.rows():
                writer.writerow([level, feature, t1, t5, t10, "true" if t10 == 0 else "false"])


def rank_features(importance) -> np.ndarray:
    """Feature indices by decreasing importance; ties keep catalog order."""
    return np.argsort(-np.asarray(importance, dtype=float), kind="stable")


def tally_rankings(rankings, feature_names, ks=TOP_KS) -> dict[str, list[int]]:
    counts = {name: [0] * len(ks) for name in feature_names}
    for ranking in rankings:
        for j, k in enumerate(ks):
            for idx in list(ranking)[:k]:
                counts[feature_names[idx]][j] += 1
    return counts


def build_importance_tables(trained) -> ImportanceTable:
    """Count top-1/5/10 appearances per level over models that expose importance."""
    by_level: dict[str, list] = {}
    names: dict[str, list[str]] = {}
    for model in trained:
        if model.algorithm not in ("LR", "SVM", "DT", "RF"):
            continue
        level = model.level or ElementLevel.CLASS.value
        feature_names = list(model.feature_names) or _names_for(model)
        known = names.setdefault(level, feature_names)
        if known != feature_names:
            raise CatalogMismatch(f"{level} models disagree on the feature catalog")
        by_level.setdefault(level, []).append(rank_features(ml.feature_importance(model)))
    counts = {level: tally_rankings(r, names[level]) for level, r in by_level.items()}
    return ImportanceTable(counts, {level: len(r) for level, r in by_level.items()})


def _names_for(model) -> list[str]:
    try:
        return list(catalog_by_hash(model.catalog_hash).names)
    except CatalogMismatch:
        return [f"f{i}" for i in range(model.n_features)]


__all__ = [
    "EvaluationReport",
    "FoldResult",
    "ImportanceTable",
    "SearchConfig",
    "build_importance_tables",
    "confusion",
    "cross_dataset_evaluate",
    "cross_validate",
    "ordered_split_evaluate",
    "random_search",
    "rank_features",
    "stratified_folds",
    "tally_rankings",
    "time_ordered_split",
    "train_and_evaluate",
]
