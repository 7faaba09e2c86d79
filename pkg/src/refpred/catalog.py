"""Ordered feature catalogs per element level.

The catalog fixes column order for datasets, models and reports. Each catalog
is identified by a digest of its ordered feature names; datasets and models
carry that digest and refuse to mix with a different one.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache

from .errors import CatalogMismatch
from .taxonomy import ElementLevel

CATALOG_VERSION = 1


class FeatureKind(str, enum.Enum):
    SOURCE = "SOURCE"
    PROCESS = "PROCESS"
    OWNERSHIP = "OWNERSHIP"


CLASS_SOURCE_FEATURES: tuple[str, ...] = (
    "class_cbo",
    "class_wmc",
    "class_rfc",
    "class_lcom",
    "class_loc",
    "class_methods",
    "class_public_methods",
    "class_private_methods",
    "class_protected_methods",
    "class_default_methods",
    "class_static_methods",
    "class_abstract_methods",
    "class_synchronized_methods",
    "class_fields",
    "class_public_fields",
    "class_private_fields",
    "class_protected_fields",
    "class_default_fields",
    "class_static_fields",
    "class_final_fields",
    "class_synchronized_fields",
    "class_static_invocations",
    "class_return_qty",
    "class_loop_qty",
    "class_comparisons_qty",
    "class_try_catch_qty",
    "class_parenthesized_exps_qty",
    "class_string_literals_qty",
    "class_numbers_qty",
    "class_assignments_qty",
    "class_math_operations_qty",
    "class_variables_qty",
    "class_max_nested_blocks",
    "class_anonymous_classes_qty",
    "class_inner_classes_qty",
    "class_lambdas_qty",
    "class_unique_words_qty",
)

METHOD_SOURCE_FEATURES: tuple[str, ...] = (
    "method_complexity",
    "method_loc",
    "method_parameters",
    "method_return_qty",
    "method_loop_qty",
    "method_comparisons_qty",
    "method_try_catch_qty",
    "method_parenthesized_exps_qty",
    "method_string_literals_qty",
    "method_numbers_qty",
    "method_assignments_qty",
    "method_math_operations_qty",
    "method_variables_qty",
    "method_max_nested_blocks",
    "method_anonymous_classes_qty",
    "method_inner_classes_qty",
    "method_lambdas_qty",
    "method_unique_words_qty",
    "method_invocations_qty",
    "method_static_invocations_qty",
)

PROCESS_FEATURES: tuple[str, ...] = (
    "process_commits",
    "process_lines_added",
    "process_lines_removed",
    "process_bug_fixes",
    "process_previous_refactorings",
)

OWNERSHIP_FEATURES: tuple[str, ...] = (
    "owner_authors",
    "owner_minor_authors",
    "owner_major_authors",
    "owner_author_ownership",
)

VARIABLE_FEATURES: tuple[str, ...] = ("variable_usage_count",)


@dataclass(frozen=True)
class FeatureEntry:
    name: str
    level: ElementLevel
    kind: FeatureKind


@dataclass(frozen=True)
class FeatureCatalog:
    level: ElementLevel
    entries: tuple[FeatureEntry, ...]
    include_history: bool

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    @property
    def catalog_hash(self) -> str:
        return _digest(tuple(self.names))

    def __len__(self) -> int:
        return len(self.entries)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def to_manifest(self) -> dict:
        return {
            "version": CATALOG_VERSION,
            "level": self.level.value,
            "include_history": self.include_history,
            "hash": self.catalog_hash,
            "entries": [
                {"name": e.name, "level": e.level.value, "kind": e.kind.value}
                for e in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_manifest(), indent=2)

    @classmethod
    def from_manifest(cls, data: dict) -> "FeatureCatalog":
        entries = tuple(
            FeatureEntry(e["name"], ElementLevel(e["level"]), FeatureKind(e["kind"]))
            for e in data["entries"]
        )
        catalog = cls(ElementLevel(data["level"]), entries, bool(data["include_history"]))
        if catalog.catalog_hash != data["hash"]:
            raise CatalogMismatch(
                f"manifest hash {data['hash']} does not match its entries ({catalog.catalog_hash})"
            )
        return catalog


def _digest(names: tuple[str, ...]) -> str:
    return hashlib.sha256("\n".join(names).encode("utf-8")).hexdigest()


def _entries(names, level, kind):
    return tuple(FeatureEntry(n, level, kind) for n in names)


@lru_cache(maxsize=None)
def catalog_for(level: ElementLevel, include_history: bool | None = None) -> FeatureCatalog:
    """Return the canonical catalog for ``level``.

    Class-level catalogs always carry the process and ownership features.
    Method and variable catalogs carry them only when ``include_history`` is
    true (off by default), appended after the source metrics as class context.
    """
    level = ElementLevel.parse(level)
    history = _entries(PROCESS_FEATURES, ElementLevel.CLASS, FeatureKind.PROCESS) + _entries(
        OWNERSHIP_FEATURES, ElementLevel.CLASS, FeatureKind.OWNERSHIP
    )
    class_source = _entries(CLASS_SOURCE_FEATURES, ElementLevel.CLASS, FeatureKind.SOURCE)
    if level is ElementLevel.CLASS:
        return FeatureCatalog(level, class_source + history, True)

    include_history = bool(include_history)
    entries = class_source + _entries(METHOD_SOURCE_FEATURES, ElementLevel.METHOD, FeatureKind.SOURCE)
    if include_history:
        entries += history
    if level is ElementLevel.VARIABLE:
        entries += _entries(VARIABLE_FEATURES, ElementLevel.VARIABLE, FeatureKind.SOURCE)
    return FeatureCatalog(level, entries, include_history)


def all_catalogs() -> list[FeatureCatalog]:
    return [
        catalog_for(ElementLevel.CLASS),
        catalog_for(ElementLevel.METHOD, False),
        catalog_for(ElementLevel.METHOD, True),
        catalog_for(ElementLevel.VARIABLE, False),
        catalog_for(ElementLevel.VARIABLE, True),
    ]


def catalog_by_hash(digest: str) -> FeatureCatalog:
    for catalog in all_catalogs():
        if catalog.catalog_hash == digest:
            return catalog
    raise CatalogMismatch(f"no known catalog has hash {digest}")
