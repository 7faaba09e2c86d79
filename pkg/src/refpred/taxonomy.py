"""Refactoring taxonomy, element levels and the records shared by every stage."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class ElementLevel(str, enum.Enum):
    CLASS = "CLASS"
    METHOD = "METHOD"
    VARIABLE = "VARIABLE"

    @classmethod
    def parse(cls, value: str | "ElementLevel") -> "ElementLevel":
        if isinstance(value, ElementLevel):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(f"unknown element level {value!r}") from None


class RefactoringType(enum.Enum):
    """The 20 refactorings the models predict, each bound to one level."""

    EXTRACT_CLASS = ("Extract Class", ElementLevel.CLASS)
    EXTRACT_INTERFACE = ("Extract Interface", ElementLevel.CLASS)
    EXTRACT_SUBCLASS = ("Extract Subclass", ElementLevel.CLASS)
    EXTRACT_SUPERCLASS = ("Extract Superclass", ElementLevel.CLASS)
    MOVE_CLASS = ("Move Class", ElementLevel.CLASS)
    RENAME_CLASS = ("Rename Class", ElementLevel.CLASS)
    MOVE_AND_RENAME_CLASS = ("Move and Rename Class", ElementLevel.CLASS)

    EXTRACT_AND_MOVE_METHOD = ("Extract and Move Method", ElementLevel.METHOD)
    EXTRACT_METHOD = ("Extract Method", ElementLevel.METHOD)
    INLINE_METHOD = ("Inline Method", ElementLevel.METHOD)
    MOVE_METHOD = ("Move Method", ElementLevel.METHOD)
    PULL_UP_METHOD = ("Pull Up Method", ElementLevel.METHOD)
    PUSH_DOWN_METHOD = ("Push Down Method", ElementLevel.METHOD)
    RENAME_METHOD = ("Rename Method", ElementLevel.METHOD)

    EXTRACT_VARIABLE = ("Extract Variable", ElementLevel.VARIABLE)
    INLINE_VARIABLE = ("Inline Variable", ElementLevel.VARIABLE)
    PARAMETERIZE_VARIABLE = ("Parameterize Variable", ElementLevel.VARIABLE)
    RENAME_PARAMETER = ("Rename Parameter", ElementLevel.VARIABLE)
    RENAME_VARIABLE = ("Rename Variable", ElementLevel.VARIABLE)
    REPLACE_VARIABLE_WITH_ATTRIBUTE = ("Replace Variable with Attribute", ElementLevel.VARIABLE)

    def __init__(self, display: str, level: ElementLevel):
        self.display = display
        self.level = level

    @classmethod
    def from_name(cls, name: str) -> "RefactoringType":
        """Accept either the display name ("Extract Class") or the member name."""
        for member in cls:
            if name == member.display or name == member.name:
                return member
        raise KeyError(name)

    def __str__(self) -> str:
        return self.display


def canonical_taxonomy() -> list[RefactoringType]:
    return list(RefactoringType)


def refactorings_at(level: ElementLevel) -> list[RefactoringType]:
    return [r for r in RefactoringType if r.level is level]


@dataclass(frozen=True, order=True)
class ElementKey:
    project: str
    commit_hash: str
    file_path: str
    class_name: str
    method_signature: str | None = None
    variable_name: str | None = None

    @property
    def level(self) -> ElementLevel:
        if self.variable_name is not None:
            return ElementLevel.VARIABLE
        if self.method_signature is not None:
            return ElementLevel.METHOD
        return ElementLevel.CLASS

    def check(self, level: ElementLevel) -> None:
        has_method = self.method_signature is not None
        has_variable = self.variable_name is not None
        if has_method != (level in (ElementLevel.METHOD, ElementLevel.VARIABLE)):
            raise ValueError(f"method signature presence does not match level {level.value}")
        if has_variable != (level is ElementLevel.VARIABLE):
            raise ValueError(f"variable name presence does not match level {level.value}")

    def sort_key(self) -> tuple[str, ...]:
        # absent members sort before present ones, so a class precedes its methods
        return (
            self.project,
            self.commit_hash,
            self.file_path,
            self.class_name,
            self.method_signature or "",
            self.variable_name or "",
        )


@dataclass(frozen=True)
class LabeledInstance:
    key: ElementKey
    level: ElementLevel
    refactoring: RefactoringType | None
    features: tuple[float, ...] = field(default=())
    commit_timestamp: int = 0

    def __post_init__(self):
        self.key.check(self.level)
        if self.refactoring is not None and self.refactoring.level is not self.level:
            raise ValueError(f"{self.refactoring.display} is not a {self.level.value}-level refactoring")
        object.__setattr__(self, "features", tuple(float(v) for v in self.features))

    @property
    def is_refactoring(self) -> bool:
        return self.refactoring is not None
