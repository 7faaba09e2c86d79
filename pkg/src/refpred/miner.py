"""Walk a repository's history and label refactoring / non-refactoring events.

Refactoring detections are not computed here; they are ingested from a
line-delimited JSON file (one detection per line)::

    {"commit": "<sha>", "path": "src/main/java/Foo.java", "level": "method",
     "refactoring": "Extract Method", "class": "com.acme.Foo",
     "method": "bar(int)"}

``path`` is the file path in the parent (pre-refactoring) version. ``method``
uses the ``name(Type,...)`` signature form produced by ``javaparse``.
"""

from __future__ import annotations

import json
import logging
import re
import subprocess
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Iterator

from . import gitlog
from .errors import MalformedRecord, ParseError, RepoUnreadable, UnknownRefactoringName
from .histmetrics import CommitRecord, FileDelta, normalize_author
from .javaparse import parse_java
from .taxonomy import ElementKey, ElementLevel, RefactoringType

log = logging.getLogger(__name__)

DEFAULT_K = 50
DEFAULT_TIMEOUT_SECS = 20.0

DETECTION_FIELDS = {"commit", "path", "level", "refactoring", "class", "method", "variable"}
REQUIRED_FIELDS = {"commit", "path", "level", "refactoring", "class"}

_TEST_NAME = re.compile(r"(Test|Tests|TestCase)\.java$")


@dataclass(frozen=True)
class DetectionRecord:
    commit: str
    path: str
    level: ElementLevel
    refactoring: RefactoringType
    class_name: str
    method: str | None = None
    variable: str | None = None
    line_no: int = 0


def _parse_detection(line: str, line_no: int) -> DetectionRecord:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise MalformedRecord(line_no, "record is not an object")
    unknown = set(data) - DETECTION_FIELDS
    if unknown:
        raise MalformedRecord(line_no, f"unexpected fields {sorted(unknown)}")
    missing = REQUIRED_FIELDS - set(data)
    if missing:
        raise MalformedRecord(line_no, f"missing fields {sorted(missing)}")
    try:
        level = ElementLevel.parse(data["level"])
    except ValueError as exc:
        raise MalformedRecord(line_no, str(exc)) from None
    try:
        refactoring = RefactoringType.from_name(data["refactoring"])
    except KeyError:
        raise UnknownRefactoringName(data["refactoring"], line_no) from None
    if refactoring.level is not level:
        raise UnknownRefactoringName(
            data["refactoring"],
            line_no,
            f"{refactoring.display} is a {refactoring.level.value.lower()}-level refactoring, "
            f"not {level.value.lower()}-level",
        )
    record = DetectionRecord(
        commit=str(data["commit"]),
        path=str(data["path"]),
        level=level,
        refactoring=refactoring,
        class_name=str(data["class"]),
        method=data.get("method"),
        variable=data.get("variable"),
        line_no=line_no,
    )
    try:
        ElementKey("", record.commit, record.path, record.class_name, record.method, record.variable).check(level)
    except ValueError as exc:
        raise MalformedRecord(line_no, str(exc)) from None
    return record


def ingest_detections(path, commit_order: dict[str, int] | None = None) -> list[DetectionRecord]:
    """Read a detection file.

    Records are ordered by the position of their commit in ``commit_order``
    (commits missing from it go last) and then by file path; the sort is
    stable, so detections on the same file keep their line order.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            records.append(_parse_detection(line, line_no))
    if commit_order is not None:
        last = len(commit_order)
        records.sort(key=lambda r: (commit_order.get(r.commit, last), r.path))
    else:
        records.sort(key=lambda r: r.path)
        # keep file order of commits, which is the order they first appear
        first_seen: dict[str, int] = {}
        for r in records:
            first_seen.setdefault(r.commit, r.line_no)
        records.sort(key=lambda r: (first_seen[r.commit], r.path))
    return records


def is_test_file(file_path: str) -> bool:
    """True for test sources: a ``test``/``tests`` directory or a Test-style file name."""
    parts = PurePosixPath(file_path.replace("\\", "/")).parts
    if any(p in ("test", "tests") for p in parts[:-1]):
        return True
    name = parts[-1] if parts else ""
    return bool(_TEST_NAME.search(name)) or (name.startswith("Test") and name[4:5].isupper())


class EventKind:
    REFACTORING = "REFACTORING"
    NON_REFACTORING = "NON_REFACTORING"


@dataclass(frozen=True)
class MiningEvent:
    kind: str
    key: ElementKey
    refactoring: RefactoringType | None
    snapshot_commit: str
    timestamp: int
    previous_refactorings: int = 0
    history: tuple[CommitRecord, ...] = field(default=(), compare=False, repr=False)

    @property
    def level(self) -> ElementLevel:
        return self.key.level

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "commit": self.key.commit_hash,
            "snapshot": self.snapshot_commit,
            "path": self.key.file_path,
            "class": self.key.class_name,
            "method": self.key.method_signature,
            "variable": self.key.variable_name,
            "refactoring": self.refactoring.display if self.refactoring else None,
            "timestamp": self.timestamp,
            "previous_refactorings": self.previous_refactorings,
            "history": [c.hash for c in self.history],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class _FileState:
    streak: int = 0
    history: list[CommitRecord] = field(default_factory=list)
    refactorings: int = 0


def _class_names(repo: str, commit: str, path: str) -> list[str] | None:
    source = gitlog.show_file(repo, commit, path)
    if source is None:
        return None
    try:
        unit = parse_java(source)
    except ParseError as exc:
        log.warning("discarding %s@%s: %s", path, commit[:10], exc)
        return None
    return [t.fqn for t in unit.types]


def walk_history(
    repo,
    detections: list[DetectionRecord],
    k: int = DEFAULT_K,
    per_commit_timeout: float = DEFAULT_TIMEOUT_SECS,
    project: str | None = None,
) -> Iterator[MiningEvent]:
    """Yield refactoring and non-refactoring events in commit order.

    A file's clean streak counts the commits that modify it without any
    detection; when it reaches ``k`` every class in the file becomes a
    non-refactoring event and the streak restarts. A detection on the file
    emits a refactoring event whose snapshot is the parent commit and resets
    the streak. Test files never produce events.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    repo = str(Path(repo).resolve())
    if not gitlog.is_repository(repo):
        raise RepoUnreadable(f"{repo} is not a git repository")
    project = project or Path(repo).name
    commits = gitlog.first_parent_commits(repo)

    by_commit: dict[str, list[DetectionRecord]] = defaultdict(list)
    for d in detections:
        by_commit[d.commit].append(d)
    known = {c.hash for c in commits}
    stray = [d for d in detections if d.commit not in known]
    if stray:
        log.warning("%d detections reference commits outside the first-parent history", len(stray))

    files: dict[str, _FileState] = {}
    for commit in commits:
        started = time.monotonic()
        try:
            changes = gitlog.commit_changes(repo, commit, timeout=max(per_commit_timeout, 1e-3))
        except subprocess.TimeoutExpired:
            changes = None
        if changes is None or time.monotonic() - started > per_commit_timeout:
            log.warning("timeout: skipping commit %s", commit.hash)
            continue

        record_base = dict(
            hash=commit.hash,
            timestamp=commit.timestamp,
            author_id=normalize_author(commit.author_name, commit.author_email),
            message=commit.message,
        )
        pending = list(by_commit.get(commit.hash, []))
        refactoring_events: list[MiningEvent] = []
        clean_events: list[MiningEvent] = []

        for change in changes:
            if not change.path.endswith(".java") and not (change.old_path or "").endswith(".java"):
                continue
            deleted = change.status == "D"
            if deleted:
                state = files.pop(change.path, None)
            elif change.status == "R":
                state = files.pop(change.old_path, None) or _FileState()
                files[change.path] = state
            else:
                state = files.setdefault(change.path, _FileState())

            paths = {change.path, change.old_path} - {None}
            matched = [d for d in pending if d.path in paths]
            pending = [d for d in pending if d.path not in paths]
            record = CommitRecord(
                **record_base, deltas={change.path: FileDelta(change.lines_added, change.lines_removed)}
            )
            test_file = is_test_file(change.path)

            if matched:
                history_before = tuple(state.history) if state is not None else ()
                refactoring_events.extend(
                    _refactoring_events(repo, project, commit, matched, history_before, state, test_file)
                )
                if state is not None:
                    state.refactorings += len(matched)
                    state.streak = 0
            if state is None or deleted:
                continue
            state.history.append(record)
            if matched:
                continue
            state.streak += 1
            if state.streak == k:
                state.streak = 0
                if test_file:
                    continue
                names = _class_names(repo, commit.hash, change.path)
                if names is None:
                    continue
                for name in names:
                    clean_events.append(
                        MiningEvent(
                            EventKind.NON_REFACTORING,
                            ElementKey(project, commit.hash, change.path, name),
                            None,
                            commit.hash,
                            commit.timestamp,
                            state.refactorings,
                            tuple(state.history),
                        )
                    )

        # detections on files this commit did not report as changed
        for d in pending:
            state = files.get(d.path)
            history_before = tuple(state.history) if state is not None else ()
            refactoring_events.extend(
                _refactoring_events(repo, project, commit, [d], history_before, state, is_test_file(d.path))
            )
            if state is not None:
                state.refactorings += 1
                state.streak = 0

        yield from refactoring_events
        yield from sorted(clean_events, key=lambda e: e.key.sort_key())


def _refactoring_events(repo, project, commit, matched, history_before, state, test_file):
    if test_file:
        return []
    if commit.parent is None:
        for d in matched:
            log.warning("discarding %s on %s: commit %s has no parent", d.refactoring.display, d.path, commit.hash[:10])
        return []
    previous = state.refactorings if state is not None else 0
    events = []
    for d in matched:
        events.append(
            MiningEvent(
                EventKind.REFACTORING,
                ElementKey(project, commit.hash, d.path, d.class_name, d.method, d.variable),
                d.refactoring,
                commit.parent,
                commit.timestamp,
                previous,
                history_before,
            )
        )
    return events
