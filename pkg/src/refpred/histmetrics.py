"""Process and code-ownership metrics computed from a file's commit history."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyHistory, UnorderedHistory

BUG_FIX_KEYWORDS = ("bug", "error", "mistake", "fault", "wrong", "fail", "fix")
MINOR_AUTHOR_THRESHOLD = 0.05
MINOR_AUTHOR_PERCENT_DENOM = 20  # share < 1/20 is minor


@dataclass(frozen=True)
class FileDelta:
    lines_added: int = 0
    lines_removed: int = 0

    def __post_init__(self):
        if self.lines_added < 0 or self.lines_removed < 0:
            raise ValueError("line deltas must be non-negative")


@dataclass(frozen=True)
class CommitRecord:
    hash: str
    timestamp: int
    author_id: str
    message: str = ""
    deltas: dict[str, FileDelta] = field(default_factory=dict)

    def delta_for(self, path: str) -> FileDelta:
        return self.deltas.get(path, FileDelta())


@dataclass(frozen=True)
class ProcessStats:
    commit_count: int = 0
    lines_added: int = 0
    lines_removed: int = 0
    bug_fix_count: int = 0
    previous_refactoring_count: int = 0

    def vector(self) -> list[float]:
        return [
            float(self.commit_count),
            float(self.lines_added),
            float(self.lines_removed),
            float(self.bug_fix_count),
            float(self.previous_refactoring_count),
        ]


@dataclass(frozen=True)
class OwnershipStats:
    author_count: int
    minor_author_count: int
    major_author_count: int
    author_ownership: float

    def vector(self) -> list[float]:
        return [
            float(self.author_count),
            float(self.minor_author_count),
            float(self.major_author_count),
            float(self.author_ownership),
        ]


ZERO_OWNERSHIP = OwnershipStats(0, 0, 0, 0.0)


def normalize_author(name: str | None, email: str | None) -> str:
    if email and email.strip():
        return email.strip().lower()
    return (name or "").strip()


def is_bug_fix(message: str) -> bool:
    lowered = message.lower()
    return any(word in lowered for word in BUG_FIX_KEYWORDS)


def compute_process_stats(history, detections_for_file=0, path: str | None = None) -> ProcessStats:
    """Process metrics over ``history`` (commits touching the file, oldest first).

    ``detections_for_file`` is either the number of earlier refactorings on the
    file or the detection records themselves. When ``path`` is given the line
    deltas are read for that path only; otherwise every delta of the commit is
    summed.
    """
    previous = None
    for commit in history:
        if previous is not None and commit.timestamp < previous:
            raise UnorderedHistory(f"commit {commit.hash} is older than its predecessor")
        previous = commit.timestamp

    added = removed = 0
    for commit in history:
        deltas = [commit.delta_for(path)] if path is not None else list(commit.deltas.values())
        added += sum(d.lines_added for d in deltas)
        removed += sum(d.lines_removed for d in deltas)

    refactorings = detections_for_file if isinstance(detections_for_file, int) else len(list(detections_for_file))
    return ProcessStats(
        commit_count=len(history),
        lines_added=added,
        lines_removed=removed,
        bug_fix_count=sum(1 for c in history if is_bug_fix(c.message)),
        previous_refactoring_count=refactorings,
    )


def compute_ownership(history) -> OwnershipStats:
    if not history:
        raise EmptyHistory("ownership needs at least one commit")
    per_author = Counter(c.author_id for c in history)
    total = sum(per_author.values())
    # integer comparison keeps the exact 5% boundary on the major side
    minor = sum(1 for n in per_author.values() if n * MINOR_AUTHOR_PERCENT_DENOM < total)
    return OwnershipStats(
        author_count=len(per_author),
        minor_author_count=minor,
        major_author_count=len(per_author) - minor,
        author_ownership=max(per_author.values()) / total,
    )
