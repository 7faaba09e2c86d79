"""Exception types raised across refpred."""


class RefpredError(Exception):
    """Base class for all refpred errors."""


class MalformedRecord(RefpredError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class UnknownRefactoringName(MalformedRecord):
    def __init__(self, name: str, line_no: int = 0, reason: str | None = None):
        super().__init__(line_no, reason or f"unknown refactoring {name!r}")
        self.name = name


class RepoUnreadable(RefpredError):
    pass


class ParseError(RefpredError):
    def __init__(self, message: str, position: tuple[int, int] | None = None):
        where = f" at {position[0]}:{position[1]}" if position else ""
        super().__init__(f"{message}{where}")
        self.position = position


class ClassNotFound(RefpredError):
    pass


class MethodNotFound(RefpredError):
    pass


class VariableNotFound(RefpredError):
    pass


class UnorderedHistory(RefpredError):
    pass


class EmptyHistory(RefpredError):
    pass


class CatalogMismatch(RefpredError):
    pass


class EmptyClass(RefpredError):
    def __init__(self, side: str, refactoring: str = ""):
        super().__init__(f"no {side} instances available for {refactoring or 'table'}")
        self.side = side


class SingleClass(RefpredError):
    pass


class NonBinaryLabels(RefpredError):
    pass


class UnsupportedAlgorithm(RefpredError):
    pass


class ClassTooSmall(RefpredError):
    pass


class DegenerateSplit(RefpredError):
    pass
