"""Thin wrappers over the git command line."""

from __future__ import annotations

import subprocess
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .errors import RepoUnreadable

SIMILARITY = "-M50%"


@dataclass(frozen=True)
class CommitMeta:
    hash: str
    parent: str | None
    timestamp: int
    author_name: str
    author_email: str
    message: str


@dataclass(frozen=True)
class FileChange:
    status: str  # A, M, D or R
    path: str
    old_path: str | None
    lines_added: int
    lines_removed: int


def git(repo, *args: str, timeout: float | None = None, check: bool = True) -> str:
    try:
        proc = subprocess.run(
            ["git", "-C", str(repo), *args],
            capture_output=True,
            timeout=timeout,
        )
    except FileNotFoundError as exc:
        raise RepoUnreadable("git executable not found") from exc
    if check and proc.returncode != 0:
        raise RepoUnreadable(proc.stderr.decode("utf-8", "replace").strip() or f"git {args[0]} failed")
    return proc.stdout.decode("utf-8", "replace")


def is_repository(path) -> bool:
    path = Path(path)
    if not path.is_dir():
        return False
    proc = subprocess.run(
        ["git", "-C", str(path), "rev-parse", "--is-inside-work-tree"],
        capture_output=True,
    )
    return proc.returncode == 0 and proc.stdout.strip() == b"true"


def first_parent_commits(repo, rev: str = "HEAD") -> list[CommitMeta]:
    """All commits on the first-parent chain of ``rev``, oldest first."""
    if not Path(repo).is_dir():
        raise RepoUnreadable(f"{repo} is not a directory")
    out = git(
        repo,
        "log",
        "--first-parent",
        "--reverse",
        "--format=%H%x1f%P%x1f%at%x1f%an%x1f%ae%x1f%B%x1e",
        rev,
    )
    commits = []
    for record in out.split("\x1e"):
        record = record.strip("\n")
        if not record:
            continue
        h, parents, ts, name, email, message = record.split("\x1f", 5)
        parent = parents.split()[0] if parents.strip() else None
        commits.append(CommitMeta(h, parent, int(ts), name, email, message.strip()))
    return commits


def _count(value: str) -> int:
    return int(value) if value.isdigit() else 0


def commit_changes(repo, commit: CommitMeta, timeout: float | None = None) -> list[FileChange]:
    """Files changed by ``commit`` against its first parent, renames detected at 50%."""
    base = [commit.parent, commit.hash] if commit.parent else ["--root", commit.hash]
    out = git(
        repo, "diff-tree", "-r", "--no-commit-id", SIMILARITY, "--raw", "--numstat", "-z", *base,
        timeout=timeout,
    )
    parts = out.split("\0")
    raw: list[tuple[str, str, str | None]] = []
    stats: list[tuple[int, int]] = []
    i = 0
    while i < len(parts):
        token = parts[i]
        if not token:
            i += 1
            continue
        if token.startswith(":"):
            status = token.split()[-1][0]
            if status in ("R", "C"):
                raw.append((status, parts[i + 2], parts[i + 1]))
                i += 3
            else:
                raw.append((status, parts[i + 1], None))
                i += 2
        else:
            added, removed, path = token.split("\t", 2)
            stats.append((_count(added), _count(removed)))
            i += 1 if path else 3
    changes = []
    for (status, path, old), (added, removed) in zip(raw, stats):
        if status == "C":
            status, old = "A", None
        elif status not in ("A", "M", "D", "R"):
            status = "M"
        changes.append(FileChange(status, path, old, added, removed))
    return changes


@lru_cache(maxsize=4096)
def show_file(repo: str, commit: str, path: str) -> str | None:
    proc = subprocess.run(["git", "-C", str(repo), "show", f"{commit}:{path}"], capture_output=True)
    if proc.returncode != 0:
        return None
    return proc.stdout.decode("utf-8", "replace")


def head_commit(repo) -> CommitMeta | None:
    try:
        out = git(repo, "log", "-1", "--format=%H%x1f%P%x1f%at%x1f%an%x1f%ae%x1f%B")
    except RepoUnreadable:
        return None
    if not out.strip():
        return None
    h, parents, ts, name, email, message = out.split("\x1f", 5)
    return CommitMeta(h, parents.split()[0] if parents.strip() else None, int(ts), name, email, message.strip())


def file_log(repo, path: str) -> list[tuple[CommitMeta, int, int]]:
    """Commits touching ``path`` (following renames), oldest first, with line deltas."""
    out = git(
        repo, "log", "--follow", SIMILARITY, "--numstat",
        "--format=%x1e%H%x1f%P%x1f%at%x1f%an%x1f%ae%x1f%B%x1d", "--", path,
    )
    commits = []
    for record in out.split("\x1e"):
        if not record.strip():
            continue
        header, _, rest = record.partition("\x1d")
        h, parents, ts, name, email, message = header.split("\x1f", 5)
        added = removed = 0
        for line in rest.splitlines():
            cols = line.split("\t")
            if len(cols) >= 3:
                added += _count(cols[0])
                removed += _count(cols[1])
        meta = CommitMeta(h, parents.split()[0] if parents.strip() else None, int(ts), name, email, message.strip())
        commits.append((meta, added, removed))
    # --reverse does not combine reliably with --follow
    commits.reverse()
    return commits
