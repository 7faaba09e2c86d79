"""Java parsing on top of javalang.

javalang drops two things the metrics need: parenthesized expressions (they
are unwrapped while parsing) and the extent of declarations. ``_SpanParser``
restores both: parenthesized sub-expressions become ``ParenthesizedExpression``
nodes and every type/member declaration gets a ``_span`` of token indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import javalang
from javalang import tree
from javalang.parser import JavaSyntaxError, Parser
from javalang.tokenizer import LexerError

from .errors import ClassNotFound, MethodNotFound, ParseError

NAMED_TYPES = (
    tree.ClassDeclaration,
    tree.InterfaceDeclaration,
    tree.EnumDeclaration,
    tree.AnnotationDeclaration,
)
CALLABLES = (tree.MethodDeclaration, tree.ConstructorDeclaration)


class ParenthesizedExpression(tree.Primary):
    attrs = ("expression",)


class _SpanParser(Parser):
    def _spanned(self, parse, *args):
        start = self.tokens.marker
        node = parse(*args)
        if isinstance(node, tree.Node):
            node._span = (start, self.tokens.marker)
        return node

    def parse_class_or_interface_declaration(self):
        return self._spanned(super().parse_class_or_interface_declaration)

    def parse_class_body_declaration(self):
        return self._spanned(super().parse_class_body_declaration)

    def parse_interface_body_declaration(self):
        return self._spanned(super().parse_interface_body_declaration)

    def parse_primary(self):
        token = self.tokens.look()
        if token is not None and token.value == "(" and type(token).__name__ == "Separator":
            return ParenthesizedExpression(expression=self.parse_par_expression())
        return super().parse_primary()


@dataclass
class TypeInfo:
    fqn: str
    node: tree.TypeDeclaration
    span: tuple[int, int]
    parent: "TypeInfo | None" = None
    nested_spans: list[tuple[int, int]] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.node.name

    @property
    def is_interface(self) -> bool:
        return isinstance(self.node, (tree.InterfaceDeclaration, tree.AnnotationDeclaration))

    @property
    def members(self) -> list:
        body = self.node.body
        if isinstance(self.node, tree.EnumDeclaration):
            return list(body.declarations or []) if body is not None else []
        return list(body or [])


@dataclass
class MethodInfo:
    signature: str
    node: tree.Declaration
    span: tuple[int, int]
    owner: TypeInfo

    @property
    def name(self) -> str:
        return self.node.name


@dataclass
class JavaUnit:
    source: str
    tokens: list
    tree: tree.CompilationUnit
    types: list[TypeInfo]

    @property
    def package(self) -> str:
        return self.tree.package.name if self.tree.package is not None else ""

    def find_type(self, class_name: str) -> TypeInfo:
        for info in self.types:
            if info.fqn == class_name:
                return info
        pkg = self.package
        for info in self.types:
            relative = info.fqn[len(pkg) + 1:] if pkg else info.fqn
            if relative == class_name:
                return info
        for info in self.types:
            if info.fqn.endswith("." + class_name) or info.name == class_name:
                return info
        raise ClassNotFound(class_name)

    def methods_of(self, info: TypeInfo) -> list[MethodInfo]:
        return [
            MethodInfo(method_signature(m), m, getattr(m, "_span", (0, 0)), info)
            for m in info.members
            if isinstance(m, CALLABLES)
        ]

    def find_method(self, info: TypeInfo, signature: str) -> MethodInfo:
        methods = self.methods_of(info)
        for m in methods:
            if m.signature == signature:
                return m
        compact = signature.replace(" ", "")
        for m in methods:
            if m.signature == compact:
                return m
        by_name = [m for m in methods if m.name == signature.split("(")[0].strip()]
        if len(by_name) == 1:
            return by_name[0]
        raise MethodNotFound(f"{info.fqn}#{signature}")


def type_name(node) -> str:
    if node is None:
        return "void"
    name = node.name
    sub = getattr(node, "sub_type", None)
    while sub is not None:
        name += "." + sub.name
        sub = getattr(sub, "sub_type", None)
    return name + "[]" * len(node.dimensions or [])


def method_signature(node) -> str:
    params = []
    for p in node.parameters:
        t = type_name(p.type)
        if getattr(p, "varargs", False):
            t += "[]"
        params.append(t)
    return f"{node.name}({','.join(params)})"


def parse_java(source: str) -> JavaUnit:
    try:
        tokens = list(javalang.tokenizer.tokenize(source))
    except LexerError as exc:
        raise ParseError(f"lexer error: {exc}") from None
    try:
        unit = _SpanParser(tokens).parse()
    except JavaSyntaxError as exc:
        at = getattr(exc, "at", None)
        pos = getattr(at, "position", None)
        raise ParseError(
            f"syntax error: {exc.description}",
            (pos.line, pos.column) if pos else None,
        ) from None
    except (StopIteration, IndexError, TypeError, AttributeError) as exc:
        raise ParseError(f"syntax error: {exc.__class__.__name__}") from None
    return JavaUnit(source, tokens, unit, _collect_types(unit))


def _collect_types(unit) -> list[TypeInfo]:
    prefix = unit.package.name if unit.package is not None else ""
    found: list[TypeInfo] = []

    def visit(node, parent: TypeInfo | None, owner_prefix: str):
        if isinstance(node, NAMED_TYPES):
            fqn = f"{owner_prefix}.{node.name}" if owner_prefix else node.name
            info = TypeInfo(fqn, node, getattr(node, "_span", (0, 0)), parent)
            if parent is not None:
                parent.nested_spans.append(info.span)
            found.append(info)
            for child in node.children:
                visit(child, info, fqn)
            return
        if isinstance(node, tree.Node):
            for child in node.children:
                visit(child, parent, owner_prefix)
        elif isinstance(node, (list, tuple)):
            for child in node:
                visit(child, parent, owner_prefix)

    for decl in unit.types:
        visit(decl, None, prefix)
    return found
