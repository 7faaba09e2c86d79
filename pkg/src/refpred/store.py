"""On-disk dataset of labeled instances.

Layout of a dataset directory::

    manifest.json            source, k, catalog hashes, row counts
    catalog-<LEVEL>.json     catalog manifests
    <LEVEL>/<LABEL>.csv      one file per level and label (refactoring or NONE)

Writers stage rows in a private shard and merge it under a file lock when
they close, so concurrent workers never interleave partial rows and readers
only ever see merged data.
"""

from __future__ import annotations

import csv
import json
import os
import shutil
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from filelock import FileLock

from .catalog import FeatureCatalog, catalog_for
from .errors import CatalogMismatch, EmptyClass, RefpredError
from .taxonomy import ElementKey, ElementLevel, LabeledInstance, RefactoringType

NONE_LABEL = "NONE"
KEY_COLUMNS = ("project", "commit", "path", "class", "method", "variable")
MANIFEST_VERSION = 1


class IOFailure(RefpredError):
    pass


@dataclass
class DatasetManifest:
    source: str
    k: int
    include_history: bool
    catalog_hashes: dict[str, str]
    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    created: int = 0

    def to_dict(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "source": self.source,
            "k": self.k,
            "include_history": self.include_history,
            "catalog_hashes": self.catalog_hashes,
            "counts": self.counts,
            "created": self.created,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        return cls(
            source=data["source"],
            k=int(data["k"]),
            include_history=bool(data["include_history"]),
            catalog_hashes=dict(data["catalog_hashes"]),
            counts={lvl: dict(v) for lvl, v in data.get("counts", {}).items()},
            created=int(data.get("created", 0)),
        )

    def count(self, level: ElementLevel, label: str) -> int:
        return self.counts.get(level.value, {}).get(label, 0)


def label_of(refactoring: RefactoringType | None) -> str:
    return refactoring.name if refactoring is not None else NONE_LABEL


def catalogs(include_history: bool) -> dict[ElementLevel, FeatureCatalog]:
    return {level: catalog_for(level, include_history) for level in ElementLevel}


def _write_json_atomic(path: Path, data: dict) -> None:
    tmp = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
    tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _lock(dataset_dir: Path) -> FileLock:
    return FileLock(str(dataset_dir / ".lock"))


def read_manifest(dataset_dir) -> DatasetManifest:
    path = Path(dataset_dir) / "manifest.json"
    try:
        return DatasetManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except FileNotFoundError:
        raise IOFailure(f"{dataset_dir} has no manifest.json") from None


def init_dataset(
    dataset_dir,
    source: str,
    k: int,
    include_history: bool = False,
    created: int | None = None,
    reset: bool = False,
) -> DatasetManifest:
    """Create (or reopen) a dataset directory.

    ``reset`` removes previously stored rows and the manifest; only files this
    module writes are touched.
    """
    root = Path(dataset_dir)
    root.mkdir(parents=True, exist_ok=True)
    with _lock(root):
        manifest_path = root / "manifest.json"
        if reset:
            for level in ElementLevel:
                shutil.rmtree(root / level.value, ignore_errors=True)
                (root / f"catalog-{level.value}.json").unlink(missing_ok=True)
            manifest_path.unlink(missing_ok=True)
        if manifest_path.exists():
            manifest = read_manifest(root)
            if manifest.include_history != include_history:
                raise CatalogMismatch(
                    f"{root} was created with include_history={manifest.include_history}"
                )
            return manifest
        cats = catalogs(include_history)
        manifest = DatasetManifest(
            source=source,
            k=k,
            include_history=include_history,
            catalog_hashes={lvl.value: cat.catalog_hash for lvl, cat in cats.items()},
            counts={},
            created=int(time.time()) if created is None else int(created),
        )
        for lvl, cat in cats.items():
            (root / f"catalog-{lvl.value}.json").write_text(cat.to_json() + "\n", encoding="utf-8")
        _write_json_atomic(manifest_path, manifest.to_dict())
        return manifest


def _header(catalog: FeatureCatalog) -> list[str]:
    return catalog.names + ["label", "timestamp", *KEY_COLUMNS]


def _row(instance: LabeledInstance) -> list:
    key = instance.key
    return [
        *[repr(v) for v in instance.features],
        label_of(instance.refactoring),
        str(int(instance.commit_timestamp)),
        key.project,
        key.commit_hash,
        key.file_path,
        key.class_name,
        key.method_signature if key.method_signature is not None else "",
        key.variable_name if key.variable_name is not None else "",
    ]


class ShardWriter:
    """Stage rows for one worker; ``close`` merges them into the dataset."""

    def __init__(self, dataset_dir, worker_id: str | None = None):
        self.root = Path(dataset_dir)
        self.manifest = read_manifest(self.root)
        self.catalogs = catalogs(self.manifest.include_history)
        for lvl, cat in self.catalogs.items():
            if self.manifest.catalog_hashes.get(lvl.value) != cat.catalog_hash:
                raise CatalogMismatch(f"{self.root} stores a different {lvl.value} catalog")
        self.shard = self.root / ".shards" / (worker_id or uuid.uuid4().hex)
        self.shard.mkdir(parents=True, exist_ok=True)
        self._handles: dict[tuple[str, str], tuple] = {}
        self._counts: dict[tuple[str, str], int] = {}
        self.written = 0
        self._closed = False

    def write(self, instance: LabeledInstance) -> None:
        catalog = self.catalogs[instance.level]
        if len(instance.features) != len(catalog):
            raise CatalogMismatch(
                f"{instance.level.value} vector has {len(instance.features)} values, catalog has {len(catalog)}"
            )
        label = label_of(instance.refactoring)
        slot = (instance.level.value, label)
        if slot not in self._handles:
            path = self.shard / f"{instance.level.value}__{label}.csv"
            fh = open(path, "a", newline="", encoding="utf-8")
            self._handles[slot] = (fh, csv.writer(fh))
        self._handles[slot][1].writerow(_row(instance))
        self._counts[slot] = self._counts.get(slot, 0) + 1
        self.written += 1

    def write_all(self, instances) -> int:
        for inst in instances:
            self.write(inst)
        return self.written

    def close(self) -> int:
        if self._closed:
            return self.written
        self._closed = True
        for fh, _ in self._handles.values():
            fh.close()
        try:
            with _lock(self.root):
                manifest = read_manifest(self.root)
                for (level, label) in sorted(self._handles):
                    shard_file = self.shard / f"{level}__{label}.csv"
                    rows = shard_file.read_text(encoding="utf-8")
                    if not rows:
                        continue
                    target_dir = self.root / level
                    target_dir.mkdir(exist_ok=True)
                    target = target_dir / f"{label}.csv"
                    new_file = not target.exists()
                    with open(target, "a", newline="", encoding="utf-8") as out:
                        if new_file:
                            csv.writer(out).writerow(_header(self.catalogs[ElementLevel(level)]))
                        out.write(rows)
                    added = self._counts[(level, label)]
                    per_level = manifest.counts.setdefault(level, {})
                    per_level[label] = per_level.get(label, 0) + added
                _write_json_atomic(self.root / "manifest.json", manifest.to_dict())
        except OSError as exc:
            raise IOFailure(str(exc)) from exc
        finally:
            shutil.rmtree(self.shard, ignore_errors=True)
        self.manifest = manifest
        return self.written

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            for fh, _ in self._handles.values():
                fh.close()
            shutil.rmtree(self.shard, ignore_errors=True)
            self._closed = True


def append_instances(dataset_dir, instances, worker_id: str | None = None) -> int:
    """Append instances atomically; returns the number of rows written."""
    instances = list(instances)
    with ShardWriter(dataset_dir, worker_id) as writer:
        for inst in instances:
            writer.write(inst)
    return writer.written


def _parse_rows(path: Path, catalog: FeatureCatalog, level: ElementLevel):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != _header(catalog):
            raise CatalogMismatch(f"{path} columns do not match the {level.value} catalog")
        n = len(catalog)
        for row in reader:
            if not row:
                continue
            label = row[n]
            refactoring = None if label == NONE_LABEL else RefactoringType[label]
            project, commit, fpath, cls, method, variable = row[n + 2:n + 8]
            key = ElementKey(project, commit, fpath, cls, method or None, variable or None)
            yield LabeledInstance(key, level, refactoring, tuple(float(v) for v in row[:n]), int(row[n + 1]))


def load_instances(dataset_dir, level: ElementLevel, label: str) -> list[LabeledInstance]:
    root = Path(dataset_dir)
    manifest = read_manifest(root)
    catalog = catalog_for(level, manifest.include_history)
    if manifest.catalog_hashes.get(level.value) != catalog.catalog_hash:
        raise CatalogMismatch(f"{root} stores a different {level.value} catalog")
    path = root / level.value / f"{label}.csv"
    if not path.exists():
        return []
    return list(_parse_rows(path, catalog, level))


@dataclass
class TrainingTable:
    refactoring: RefactoringType
    X: np.ndarray
    y: np.ndarray
    timestamps: np.ndarray
    keys: list[ElementKey]
    feature_names: list[str]
    catalog_hash: str
    source: str = ""

    @property
    def positives(self) -> int:
        return int(self.y.sum())

    @property
    def negatives(self) -> int:
        return int(len(self.y) - self.y.sum())

    def rows(self):
        for i in range(len(self.y)):
            yield self.X[i], bool(self.y[i]), int(self.timestamps[i])


def table_from_instances(refactoring, positives, negatives, catalog: FeatureCatalog, source: str = "") -> TrainingTable:
    if not positives:
        raise EmptyClass("positive", refactoring.display)
    if not negatives:
        raise EmptyClass("negative", refactoring.display)
    rows = list(positives) + list(negatives)
    X = np.array([r.features for r in rows], dtype=float).reshape(len(rows), len(catalog))
    y = np.array([1] * len(positives) + [0] * len(negatives), dtype=int)
    ts = np.array([r.commit_timestamp for r in rows], dtype=np.int64)
    return TrainingTable(refactoring, X, y, ts, [r.key for r in rows], catalog.names, catalog.catalog_hash, source)


def build_training_table(dataset_dir, refactoring: RefactoringType) -> TrainingTable:
    """All instances of ``refactoring`` (label 1) plus the level's NONE pool (label 0)."""
    manifest = read_manifest(dataset_dir)
    level = refactoring.level
    positives = load_instances(dataset_dir, level, refactoring.name)
    negatives = load_instances(dataset_dir, level, NONE_LABEL)
    catalog = catalog_for(level, manifest.include_history)
    return table_from_instances(refactoring, positives, negatives, catalog, manifest.source)


def observed_counts(dataset_dir) -> dict[str, dict[str, int]]:
    """Row counts read from the CSV files themselves (manifest cross-check)."""
    root = Path(dataset_dir)
    counts: dict[str, dict[str, int]] = {}
    for level in ElementLevel:
        level_dir = root / level.value
        if not level_dir.is_dir():
            continue
        for path in sorted(level_dir.glob("*.csv")):
            with open(path, newline="", encoding="utf-8") as fh:
                n = sum(1 for row in csv.reader(fh) if row) - 1
            counts.setdefault(level.value, {})[path.stem] = n
    return counts


def write_table_csv(table: TrainingTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.feature_names + ["label", "timestamp", *KEY_COLUMNS])
        for i, key in enumerate(table.keys):
            writer.writerow(
                [repr(float(v)) for v in table.X[i]]
                + ["true" if table.y[i] else "false", str(int(table.timestamps[i]))]
                + [key.project, key.commit_hash, key.file_path, key.class_name,
                   key.method_signature or "", key.variable_name or ""]
            )
