"""Turn mining events into feature vectors and store them."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import gitlog
from .catalog import catalog_for
from .codemetrics import class_metrics, method_metrics, method_variables, variable_usage
from .errors import EmptyHistory, ParseError, RefpredError, RepoUnreadable
from .histmetrics import OwnershipStats, ProcessStats, compute_ownership, compute_process_stats
from .javaparse import JavaUnit, parse_java
from .miner import EventKind, MiningEvent, ingest_detections, walk_history
from .store import ShardWriter, init_dataset, label_of
from .taxonomy import ElementKey, ElementLevel, LabeledInstance

log = logging.getLogger(__name__)


class SnapshotCache:
    """Parsed Java units per (commit, path)."""

    def __init__(self, repo):
        self.repo = str(repo)
        self._units: dict[tuple[str, str], JavaUnit | None] = {}

    def unit(self, commit: str, path: str) -> JavaUnit:
        slot = (commit, path)
        if slot not in self._units:
            source = gitlog.show_file(self.repo, commit, path)
            if source is None:
                self._units[slot] = None
            else:
                try:
                    self._units[slot] = parse_java(source)
                except ParseError:
                    self._units[slot] = None
                    raise
        unit = self._units[slot]
        if unit is None:
            raise ParseError(f"{path} is missing or unparseable at {commit[:10]}")
        return unit


def history_vector(process: ProcessStats, ownership: OwnershipStats) -> list[float]:
    return process.vector() + ownership.vector()


def element_vectors(unit: JavaUnit, key: ElementKey, level: ElementLevel, history: list[float] | None,
                    include_history: bool, occurrence: int = 0) -> list[float]:
    """Feature vector for one element, laid out as ``catalog_for(level, include_history)``."""
    info = unit.find_type(key.class_name)
    class_vec = class_metrics(unit, info).vector()
    if level is ElementLevel.CLASS:
        vec = class_vec + list(history)
    else:
        method = unit.find_method(info, key.method_signature)
        vec = class_vec + method_metrics(unit, method).vector()
        if include_history:
            vec += list(history)
        if level is ElementLevel.VARIABLE:
            vec += variable_usage(method, key.variable_name, occurrence).vector()
    expected = len(catalog_for(level, include_history))
    if len(vec) != expected:
        raise AssertionError(f"built {len(vec)} features for a {expected}-entry catalog")
    return vec


def event_history_features(event: MiningEvent) -> list[float]:
    history = list(event.history)
    process = compute_process_stats(history, event.previous_refactorings)
    ownership = compute_ownership(history)
    return history_vector(process, ownership)


def instances_for_event(event: MiningEvent, cache: SnapshotCache, include_history: bool) -> list[LabeledInstance]:
    """Labeled instances for an event; raises on any extraction failure."""
    unit = cache.unit(event.snapshot_commit, event.key.file_path)
    history = event_history_features(event)
    if event.kind == EventKind.REFACTORING:
        level = event.refactoring.level
        vec = element_vectors(unit, event.key, level, history, include_history)
        return [LabeledInstance(event.key, level, event.refactoring, vec, event.timestamp)]

    # a clean class yields itself, each of its methods and each of their variables
    key = event.key
    info = unit.find_type(key.class_name)
    out = [LabeledInstance(key, ElementLevel.CLASS, None,
                           element_vectors(unit, key, ElementLevel.CLASS, history, include_history),
                           event.timestamp)]
    for method in unit.methods_of(info):
        mkey = ElementKey(key.project, key.commit_hash, key.file_path, key.class_name, method.signature)
        out.append(LabeledInstance(mkey, ElementLevel.METHOD, None,
                                   element_vectors(unit, mkey, ElementLevel.METHOD, history, include_history),
                                   event.timestamp))
        seen: dict[str, int] = {}
        for decl in method_variables(method):
            occurrence = seen.get(decl.name, 0)
            seen[decl.name] = occurrence + 1
            vkey = ElementKey(key.project, key.commit_hash, key.file_path, key.class_name,
                              method.signature, decl.name)
            out.append(LabeledInstance(vkey, ElementLevel.VARIABLE, None,
                                       element_vectors(unit, vkey, ElementLevel.VARIABLE, history,
                                                       include_history, occurrence),
                                       event.timestamp))
    return out


@dataclass
class MiningSummary:
    events: int = 0
    discarded: int = 0
    counts: dict[str, dict[str, int]] = field(default_factory=dict)


def mine_repository(
    repo,
    detections_file,
    out_dir,
    k: int = 50,
    timeout_secs: float = 20.0,
    include_history: bool = False,
    source: str | None = None,
    events_log=None,
) -> MiningSummary:
    """Mine ``repo`` into a fresh dataset at ``out_dir``.

    Data points whose extraction fails (unparseable snapshot, element not
    found, no history) are dropped and counted in ``discarded``.
    """
    repo = Path(repo).resolve()
    if not gitlog.is_repository(repo):
        raise RepoUnreadable(f"{repo} is not a git repository")
    commits = gitlog.first_parent_commits(repo)
    order = {c.hash: i for i, c in enumerate(commits)}
    detections = ingest_detections(detections_file, order)
    head = commits[-1].timestamp if commits else 0
    init_dataset(out_dir, source or repo.name, k, include_history, created=head, reset=True)

    summary = MiningSummary()
    cache = SnapshotCache(repo)
    with ShardWriter(out_dir, "mine") as writer:
        for event in walk_history(repo, detections, k, timeout_secs, project=repo.name):
            summary.events += 1
            if events_log is not None:
                events_log.write(event.to_json() + "\n")
            try:
                instances = instances_for_event(event, cache, include_history)
            except (RefpredError, EmptyHistory) as exc:
                summary.discarded += 1
                log.warning("discarding %s %s@%s: %s", event.kind, event.key.class_name,
                            event.snapshot_commit[:10], exc)
                continue
            for inst in instances:
                writer.write(inst)
                per_level = summary.counts.setdefault(inst.level.value, {})
                label = label_of(inst.refactoring)
                per_level[label] = per_level.get(label, 0) + 1
    return summary
