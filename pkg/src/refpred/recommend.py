"""Rank refactoring opportunities in a source tree with trained models."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gitlog
from .catalog import catalog_by_hash
from .codemetrics import method_variables
from .errors import CatalogMismatch, ParseError, RefpredError
from .features import element_vectors, history_vector
from .histmetrics import ZERO_OWNERSHIP, CommitRecord, FileDelta, ProcessStats, compute_ownership, \
    compute_process_stats, normalize_author
from .javaparse import parse_java
from .miner import is_test_file
from .ml.models import TrainedModel, load_model, predict_proba
from .taxonomy import ElementKey, ElementLevel, RefactoringType

log = logging.getLogger(__name__)

HISTORY_WARNING = (
    "WARNING: {path} has no git history; process and ownership features are zero-filled "
    "and recommendations may be less reliable"
)


@dataclass(frozen=True)
class RecommendationItem:
    key: ElementKey
    refactoring: RefactoringType
    probability: float

    def to_dict(self) -> dict:
        return {
            "probability": self.probability,
            "refactoring": self.refactoring.display,
            "level": self.refactoring.level.value,
            "path": self.key.file_path,
            "class": self.key.class_name,
            "method": self.key.method_signature,
            "variable": self.key.variable_name,
        }

    def to_line(self) -> str:
        element = self.key.class_name
        if self.key.method_signature:
            element += f"#{self.key.method_signature}"
        if self.key.variable_name:
            element += f":{self.key.variable_name}"
        return f"{self.probability:.6f}\t{self.refactoring.display}\t{element}\t{self.key.file_path}"


def load_models(model_dir) -> list[TrainedModel]:
    paths = sorted(Path(model_dir).glob("*.json"))
    models = []
    for path in paths:
        try:
            models.append(load_model(path))
        except (KeyError, ValueError) as exc:
            log.warning("skipping %s: not a model file (%s)", path.name, exc)
    return models


def file_history_features(snapshot: Path, rel_path: str, warn) -> list[float]:
    """Process + ownership features from the snapshot's own git history, zeros without it."""
    try:
        entries = gitlog.file_log(snapshot, rel_path)
    except RefpredError:
        entries = []
    if not entries:
        warn(HISTORY_WARNING.format(path=rel_path))
        return history_vector(ProcessStats(), ZERO_OWNERSHIP)
    records = [
        CommitRecord(
            meta.hash,
            meta.timestamp,
            normalize_author(meta.author_name, meta.author_email),
            meta.message,
            {rel_path: FileDelta(added, removed)},
        )
        for meta, added, removed in entries
    ]
    # git orders by commit graph; timestamps can still step back after rebases
    records.sort(key=lambda r: r.timestamp)
    return history_vector(compute_process_stats(records, 0), compute_ownership(records))


def _model_layout(model: TrainedModel) -> tuple[ElementLevel, bool]:
    catalog = catalog_by_hash(model.catalog_hash)
    return catalog.level, catalog.include_history


def recommend(model_dir, snapshot, top_n: int = 10, warn=None, models=None) -> list[RecommendationItem]:
    """Score every class, method and variable in ``snapshot``.

    Each (element, refactoring) gets the mean probability over the models
    trained for that refactoring. Items are ordered by probability, then by
    element key, then by refactoring name.
    """
    warn = warn or (lambda msg: log.warning("%s", msg))
    if top_n <= 0:
        return []
    snapshot = Path(snapshot).resolve()
    models = load_models(model_dir) if models is None else models
    by_layout: dict[tuple[ElementLevel, bool], list[TrainedModel]] = defaultdict(list)
    for model in models:
        try:
            by_layout[_model_layout(model)].append(model)
        except CatalogMismatch as exc:
            warn(f"skipping model {model.algorithm}/{model.refactoring}: {exc}")
    if not by_layout:
        warn("no usable models found")
        return []

    in_git = gitlog.is_repository(snapshot)
    head = gitlog.head_commit(snapshot) if in_git else None
    if not in_git:
        warn(f"WARNING: {snapshot} is not a git repository; process and ownership features are zero-filled")
    project = snapshot.name
    commit = head.hash if head else ""

    # element rows grouped per layout, vectors stacked for one predict call per model
    rows: dict[tuple[ElementLevel, bool], list[tuple[ElementKey, int, list[float]]]] = defaultdict(list)
    for path in sorted(snapshot.rglob("*.java")):
        rel = path.relative_to(snapshot).as_posix()
        if any(part.startswith(".") for part in path.relative_to(snapshot).parts) or is_test_file(rel):
            continue
        try:
            unit = parse_java(path.read_text(encoding="utf-8", errors="replace"))
        except ParseError as exc:
            warn(f"skipping {rel}: {exc}")
            continue
        if in_git:
            history = file_history_features(snapshot, rel, warn)
        else:
            history = history_vector(ProcessStats(), ZERO_OWNERSHIP)
        for (level, include_history) in by_layout:
            try:
                rows[(level, include_history)].extend(
                    _element_rows(unit, project, commit, rel, level, history, include_history)
                )
            except RefpredError as exc:
                warn(f"skipping {rel} at {level.value.lower()} level: {exc}")

    # same-named variables in one method share a key; the occurrence keeps them apart
    scores: dict[tuple[ElementKey, int, RefactoringType], list[float]] = defaultdict(list)
    for layout, layout_models in by_layout.items():
        elements = rows.get(layout, [])
        if not elements:
            continue
        X = np.array([vec for _, _, vec in elements], dtype=float)
        for model in sorted(layout_models, key=lambda m: (m.refactoring, m.algorithm)):
            proba = predict_proba(model, X)
            refactoring = RefactoringType[model.refactoring]
            for (key, occurrence, _), p in zip(elements, proba):
                scores[(key, occurrence, refactoring)].append(float(p))

    ranked = sorted(
        ((-float(np.mean(ps)), key.sort_key(), occurrence, ref.name, key, ref)
         for (key, occurrence, ref), ps in scores.items()),
        key=lambda t: t[:4],
    )
    return [RecommendationItem(key, ref, -neg_p) for neg_p, _, _, _, key, ref in ranked[:top_n]]


def _element_rows(unit, project, commit, rel, level, history, include_history):
    out = []
    for info in unit.types:
        ckey = ElementKey(project, commit, rel, info.fqn)
        if level is ElementLevel.CLASS:
            out.append((ckey, 0, element_vectors(unit, ckey, level, history, include_history)))
            continue
        for method in unit.methods_of(info):
            mkey = ElementKey(project, commit, rel, info.fqn, method.signature)
            if level is ElementLevel.METHOD:
                out.append((mkey, 0, element_vectors(unit, mkey, level, history, include_history)))
                continue
            seen: dict[str, int] = {}
            for decl in method_variables(method):
                occurrence = seen.get(decl.name, 0)
                seen[decl.name] = occurrence + 1
                vkey = ElementKey(project, commit, rel, info.fqn, method.signature, decl.name)
                out.append((vkey, occurrence,
                            element_vectors(unit, vkey, level, history, include_history, occurrence)))
    return out


def items_to_json(items) -> str:
    return "\n".join(json.dumps(it.to_dict(), sort_keys=True) for it in items)
