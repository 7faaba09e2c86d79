"""Class, method and variable source-code metrics for Java snapshots.

Counting rules:

* a named type declared inside a class or method is measured on its own; the
  enclosing element only counts it in ``inner_classes_qty``;
* lambdas and anonymous classes belong to the method that contains them, so
  their loops, returns, comparisons, ... are added to that method;
* cyclomatic complexity is 1 + (if, for, while, do, catch, case label,
  ternary, ``&&``, ``||``);
* max nesting counts if/for/while/do/switch/try/synchronized statements;
* unique words are the distinct raw identifier and literal tokens.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from javalang import tree
from javalang.tokenizer import Identifier, Literal

from .catalog import CLASS_SOURCE_FEATURES, METHOD_SOURCE_FEATURES
from .errors import VariableNotFound
from .javaparse import CALLABLES, NAMED_TYPES, JavaUnit, MethodInfo, ParenthesizedExpression, TypeInfo, parse_java

COMPARISON_OPS = {"==", "!=", "<", ">", "<=", ">="}
MATH_OPS = {"+", "-", "*", "/", "%"}
LOGICAL_OPS = {"&&", "||"}
LOOPS = (tree.ForStatement, tree.WhileStatement, tree.DoStatement)
NESTING = LOOPS + (
    tree.IfStatement,
    tree.SwitchStatement,
    tree.TryStatement,
    tree.SynchronizedStatement,
)
# primitives, their wrappers and the ubiquitous java.lang types do not couple
NON_COUPLING_TYPES = {
    "byte", "short", "int", "long", "float", "double", "boolean", "char", "void",
    "Byte", "Short", "Integer", "Long", "Float", "Double", "Boolean", "Character",
    "String", "Object", "Void",
    "java.lang.Byte", "java.lang.Short", "java.lang.Integer", "java.lang.Long",
    "java.lang.Float", "java.lang.Double", "java.lang.Boolean", "java.lang.Character",
    "java.lang.String", "java.lang.Object", "java.lang.Void",
}


@dataclass
class BodyCounts:
    complexity: int = 1
    returns: int = 0
    loops: int = 0
    comparisons: int = 0
    try_catch: int = 0
    parenthesized: int = 0
    string_literals: int = 0
    numbers: int = 0
    assignments: int = 0
    math_operations: int = 0
    variables: int = 0
    max_nesting: int = 0
    anonymous_classes: int = 0
    inner_classes: int = 0
    lambdas: int = 0
    invocations: int = 0


@dataclass(frozen=True)
class ClassMetrics:
    cbo: float
    wmc: float
    rfc: float
    lcom: float
    loc: float
    methods: float
    public_methods: float
    private_methods: float
    protected_methods: float
    default_methods: float
    static_methods: float
    abstract_methods: float
    synchronized_methods: float
    fields: float
    public_fields: float
    private_fields: float
    protected_fields: float
    default_fields: float
    static_fields: float
    final_fields: float
    synchronized_fields: float
    static_invocations: float
    return_qty: float
    loop_qty: float
    comparisons_qty: float
    try_catch_qty: float
    parenthesized_exps_qty: float
    string_literals_qty: float
    numbers_qty: float
    assignments_qty: float
    math_operations_qty: float
    variables_qty: float
    max_nested_blocks: float
    anonymous_classes_qty: float
    inner_classes_qty: float
    lambdas_qty: float
    unique_words_qty: float

    def as_dict(self) -> dict[str, float]:
        return {f"class_{f.name}": getattr(self, f.name) for f in fields(self)}

    def vector(self) -> list[float]:
        d = self.as_dict()
        return [d[name] for name in CLASS_SOURCE_FEATURES]


@dataclass(frozen=True)
class MethodMetrics:
    complexity: float
    loc: float
    parameters: float
    return_qty: float
    loop_qty: float
    comparisons_qty: float
    try_catch_qty: float
    parenthesized_exps_qty: float
    string_literals_qty: float
    numbers_qty: float
    assignments_qty: float
    math_operations_qty: float
    variables_qty: float
    max_nested_blocks: float
    anonymous_classes_qty: float
    inner_classes_qty: float
    lambdas_qty: float
    unique_words_qty: float
    invocations_qty: float
    static_invocations_qty: float

    def as_dict(self) -> dict[str, float]:
        return {f"method_{f.name}": getattr(self, f.name) for f in fields(self)}

    def vector(self) -> list[float]:
        d = self.as_dict()
        return [d[name] for name in METHOD_SOURCE_FEATURES]


@dataclass(frozen=True)
class VariableMetrics:
    usage_count: float

    def vector(self) -> list[float]:
        return [self.usage_count]


def _is_number(value: str) -> bool:
    return bool(value) and (value[0].isdigit() or (value[0] == "." and len(value) > 1 and value[1].isdigit()))


def _iter_children(node):
    for child in node.children:
        if isinstance(child, tree.Node):
            yield child
        elif isinstance(child, (list, tuple)):
            for item in child:
                if isinstance(item, tree.Node):
                    yield item
                elif isinstance(item, (list, tuple)):
                    yield from (x for x in item if isinstance(x, tree.Node))


class _BodyWalker:
    """Accumulates syntactic counters over an owned subtree."""

    def __init__(self):
        self.counts = BodyCounts()
        self.invoked_names: set[str] = set()
        self.invocation_nodes: list = []
        self.referenced_types: set[str] = set()
        self.type_parameters: set[str] = set()
        self.qualified_refs: list[str] = []

    def walk(self, node, depth: int = 0):
        c = self.counts
        if isinstance(node, NAMED_TYPES):
            c.inner_classes += 1
            return
        if isinstance(node, tree.ReferenceType):
            self.referenced_types.add(_reference_name(node))
            sub = node
            while sub is not None:
                for arg in sub.arguments or []:
                    self.walk(arg, depth)
                sub = getattr(sub, "sub_type", None)
            return
        if isinstance(node, tree.TypeParameter):
            self.type_parameters.add(node.name)
        elif isinstance(node, tree.CatchClauseParameter):
            self.referenced_types.update(node.types or [])

        if isinstance(node, tree.ReturnStatement):
            c.returns += 1
        elif isinstance(node, LOOPS):
            c.loops += 1
            c.complexity += 1
        elif isinstance(node, tree.IfStatement):
            c.complexity += 1
        elif isinstance(node, tree.CatchClause):
            c.complexity += 1
        elif isinstance(node, tree.SwitchStatementCase):
            c.complexity += len(node.case or [])
        elif isinstance(node, tree.TernaryExpression):
            c.complexity += 1
        elif isinstance(node, tree.BinaryOperation):
            if node.operator in COMPARISON_OPS:
                c.comparisons += 1
            elif node.operator in MATH_OPS:
                c.math_operations += 1
            elif node.operator in LOGICAL_OPS:
                c.complexity += 1
        elif isinstance(node, ParenthesizedExpression):
            c.parenthesized += 1
        elif isinstance(node, tree.Literal):
            if node.value.startswith('"'):
                c.string_literals += 1
            elif _is_number(node.value):
                c.numbers += 1
        elif isinstance(node, tree.Assignment):
            c.assignments += 1
        elif isinstance(node, tree.VariableDeclaration):
            c.variables += len(node.declarators or [])
        elif isinstance(node, tree.TryResource):
            c.variables += 1
        elif isinstance(node, (tree.ClassCreator, tree.InnerClassCreator)):
            if node.body is not None:
                c.anonymous_classes += 1
        elif isinstance(node, tree.EnumConstantDeclaration):
            if node.body:
                c.anonymous_classes += 1
        elif isinstance(node, tree.LambdaExpression):
            c.lambdas += 1
        elif isinstance(node, (tree.MethodInvocation, tree.SuperMethodInvocation)):
            c.invocations += 1
            self.invoked_names.add(node.member)
            self.invocation_nodes.append(node)

        if isinstance(node, (tree.MemberReference, tree.MethodInvocation)) and node.qualifier:
            self.qualified_refs.append(node.qualifier)

        if isinstance(node, tree.TryStatement):
            c.try_catch += 1
        inner = depth
        if isinstance(node, NESTING):
            inner = depth + 1
            c.max_nesting = max(c.max_nesting, inner)
        for child in _iter_children(node):
            self.walk(child, inner)


def _reference_name(node) -> str:
    name = node.name
    sub = getattr(node, "sub_type", None)
    while sub is not None:
        name += "." + sub.name
        sub = getattr(sub, "sub_type", None)
    return name


# -- name resolution ---------------------------------------------------------


@dataclass
class Declaration:
    name: str
    kind: str  # "param", "local" or "field" (fields of anonymous classes)
    index: int


class ScopeResolver:
    """Resolves simple names inside one method body to their declarations.

    ``references`` holds ``(name, declaration_index | None)`` in source order;
    ``None`` means the name is not a local of the method (a field, a type, ...).
    ``this_fields`` collects names accessed through ``this.name``.
    """

    def __init__(self):
        self.declarations: list[Declaration] = []
        self.references: list[tuple[str, int | None]] = []
        self.this_fields: list[str] = []
        self._scopes: list[dict[str, int]] = [{}]

    def run(self, method) -> "ScopeResolver":
        self._push()
        for p in method.parameters or []:
            self._declare(p.name, "param")
        for stmt in method.body or []:
            self._walk(stmt)
        self._pop()
        return self

    def _push(self):
        self._scopes.append({})

    def _pop(self):
        self._scopes.pop()

    def _declare(self, name: str, kind: str):
        decl = Declaration(name, kind, len(self.declarations))
        self.declarations.append(decl)
        self._scopes[-1][name] = decl.index

    def _resolve(self, name: str) -> int | None:
        for scope in reversed(self._scopes):
            if name in scope:
                return scope[name]
        return None

    def _reference(self, name: str):
        self.references.append((name, self._resolve(name)))

    def _walk_all(self, items):
        for item in items or []:
            if isinstance(item, tree.Node):
                self._walk(item)
            elif isinstance(item, (list, tuple)):
                self._walk_all(item)

    def _walk_selectors(self, node):
        for sel in getattr(node, "selectors", None) or []:
            if isinstance(sel, tree.MemberReference):
                self._walk_selectors(sel)
            elif isinstance(sel, tree.MethodInvocation):
                self._walk_all(sel.arguments)
                self._walk_selectors(sel)
            elif isinstance(sel, tree.ArraySelector):
                self._walk(sel.index)
            else:
                self._walk(sel)

    def _walk(self, node):
        if node is None or isinstance(node, NAMED_TYPES):
            return
        if isinstance(node, CALLABLES):
            self._push()
            for p in node.parameters or []:
                self._declare(p.name, "param")
            self._walk_all(node.body)
            self._pop()
            return
        if isinstance(node, tree.MemberReference):
            if node.qualifier:
                self._reference(node.qualifier.split(".")[0])
            else:
                self._reference(node.member)
            self._walk_selectors(node)
            return
        if isinstance(node, (tree.MethodInvocation,)):
            if node.qualifier:
                self._reference(node.qualifier.split(".")[0])
            self._walk_all(node.arguments)
            self._walk_selectors(node)
            return
        if isinstance(node, tree.This):
            sels = node.selectors or []
            if sels and isinstance(sels[0], tree.MemberReference):
                self.this_fields.append(sels[0].member)
            self._walk_selectors(node)
            return
        if isinstance(node, (tree.ClassCreator, tree.InnerClassCreator)):
            self._walk_all(node.arguments)
            if node.body is not None:
                self._push()
                for member in node.body:
                    if isinstance(member, tree.FieldDeclaration):
                        for d in member.declarators:
                            self._declare(d.name, "field")
                self._walk_all(node.body)
                self._pop()
            self._walk_selectors(node)
            return
        if isinstance(node, tree.FieldDeclaration):
            for d in node.declarators:
                self._walk(d.initializer)
            return
        if isinstance(node, tree.VariableDeclaration):
            for d in node.declarators or []:
                self._declare(d.name, "local")
                self._walk(d.initializer)
            return
        if isinstance(node, tree.TryStatement):
            self._push()
            for res in node.resources or []:
                self._walk(res.value)
                self._declare(res.name, "local")
            self._walk_all(node.block)
            self._pop()
            for catch in node.catches or []:
                self._push()
                self._declare(catch.parameter.name, "local")
                self._walk_all(catch.block)
                self._pop()
            if node.finally_block is not None:
                self._push()
                self._walk_all(node.finally_block)
                self._pop()
            return
        if isinstance(node, tree.LambdaExpression):
            self._push()
            for p in node.parameters or []:
                name = getattr(p, "name", None) or getattr(p, "member", None)
                if name:
                    self._declare(name, "param")
            body = node.body
            if isinstance(body, list):
                self._walk_all(body)
            else:
                self._walk(body)
            self._pop()
            return
        if isinstance(node, tree.SwitchStatementCase):
            # case labels name constants, not variables
            self._walk_all(node.statements)
            return
        if isinstance(node, tree.Primary):
            for attr in node.attrs:
                if attr not in ("selectors", "qualifier"):
                    value = getattr(node, attr)
                    if isinstance(value, tree.Node):
                        self._walk(value)
                    elif isinstance(value, (list, tuple)):
                        self._walk_all(value)
            self._walk_selectors(node)
            return
        scoped = isinstance(node, (tree.BlockStatement, tree.ForStatement, tree.SwitchStatement))
        if scoped:
            self._push()
        for child in _iter_children(node):
            self._walk(child)
        if scoped:
            self._pop()


# -- token helpers -----------------------------------------------------------


def _owned_token_indices(span: tuple[int, int], excluded: list[tuple[int, int]]) -> range | list[int]:
    start, end = span
    if not excluded:
        return range(start, end)
    return [i for i in range(start, end) if not any(a <= i < b for a, b in excluded)]


def _loc(unit: JavaUnit, indices) -> int:
    return len({unit.tokens[i].position.line for i in indices})


def _unique_words(unit: JavaUnit, indices) -> int:
    return len({unit.tokens[i].value for i in indices if isinstance(unit.tokens[i], (Identifier, Literal))})


def _nested_spans_within(unit: JavaUnit, span: tuple[int, int], owner: TypeInfo | None) -> list[tuple[int, int]]:
    a, b = span
    out = []
    for info in unit.types:
        s = info.span
        if info is owner:
            continue
        if a <= s[0] and s[1] <= b and s != span:
            out.append(s)
    # keep only outermost spans
    out.sort()
    merged: list[tuple[int, int]] = []
    for s in out:
        if merged and s[1] <= merged[-1][1]:
            continue
        merged.append(s)
    return merged


# -- extractors --------------------------------------------------------------


def _visibility(modifiers: set[str], in_interface: bool) -> str:
    for vis in ("public", "private", "protected"):
        if vis in modifiers:
            return vis
    return "public" if in_interface else "default"


def _is_abstract(member, in_interface: bool) -> bool:
    mods = member.modifiers or set()
    if "abstract" in mods:
        return True
    if in_interface and isinstance(member, tree.MethodDeclaration):
        return member.body is None and "static" not in mods and "default" not in mods
    return False


def _static_invocations(walker: _BodyWalker, known_names: set[str], static_methods: set[str]) -> int:
    total = 0
    for inv in walker.invocation_nodes:
        if not isinstance(inv, tree.MethodInvocation):
            continue
        qualifier = inv.qualifier or ""
        if qualifier:
            head = qualifier.split(".")[0]
            if head[:1].isupper() and head not in known_names:
                total += 1
        elif inv.member in static_methods and not _is_selector(inv):
            total += 1
    return total


def _is_selector(inv) -> bool:
    return getattr(inv, "_is_selector", False)


def _mark_selectors(node):
    for _, n in node:
        for sel in getattr(n, "selectors", None) or []:
            if isinstance(sel, tree.Node):
                sel._is_selector = True


def _local_names(callables) -> set[str]:
    names: set[str] = set()
    for m in callables:
        resolver = ScopeResolver().run(m)
        names.update(d.name for d in resolver.declarations)
    return names


def _field_names(info: TypeInfo) -> set[str]:
    return {d.name for m in info.members if isinstance(m, tree.FieldDeclaration) for d in m.declarators}


def _static_method_names(info: TypeInfo) -> set[str]:
    return {m.name for m in info.members if isinstance(m, tree.MethodDeclaration) and "static" in (m.modifiers or set())}


def _walk_method(node) -> _BodyWalker:
    walker = _BodyWalker()
    for p in node.parameters or []:
        walker.walk(p)
    if isinstance(node, tree.MethodDeclaration) and node.return_type is not None:
        walker.walk(node.return_type)
    for t in node.throws or []:
        walker.referenced_types.add(t)
    for tp in getattr(node, "type_parameters", None) or []:
        walker.walk(tp)
    for stmt in node.body or []:
        walker.walk(stmt, 0)
    return walker


def _method_fields_accessed(method, field_names: set[str]) -> set[str]:
    resolver = ScopeResolver().run(method)
    used = {name for name, decl in resolver.references if decl is None and name in field_names}
    used.update(f for f in resolver.this_fields if f in field_names)
    return used


def _lcom(methods, field_names: set[str]) -> int:
    accessed = [_method_fields_accessed(m, field_names) for m in methods]
    sharing = not_sharing = 0
    for i in range(len(accessed)):
        for j in range(i + 1, len(accessed)):
            if accessed[i] & accessed[j]:
                sharing += 1
            else:
                not_sharing += 1
    return max(not_sharing - sharing, 0)


def class_metrics(unit: JavaUnit, info: TypeInfo) -> ClassMetrics:
    _mark_selectors(info.node)
    in_interface = info.is_interface
    members = info.members
    callables = [m for m in members if isinstance(m, CALLABLES)]
    methods = [m for m in members if isinstance(m, tree.MethodDeclaration)]
    field_decls = [m for m in members if isinstance(m, tree.FieldDeclaration)]

    walker = _BodyWalker()
    node = info.node
    for attr in ("extends", "implements"):
        value = getattr(node, attr, None)
        if isinstance(value, tree.Node):
            walker.walk(value)
        elif isinstance(value, list):
            for v in value:
                walker.walk(v)
    for tp in getattr(node, "type_parameters", None) or []:
        walker.walk(tp)
    if isinstance(node, tree.EnumDeclaration) and node.body is not None:
        for const in node.body.constants or []:
            walker.walk(const)
    for m in members:
        walker.walk(m)
        for t in getattr(m, "throws", None) or []:
            walker.referenced_types.add(t)

    method_walkers = [_walk_method(m) for m in callables]
    wmc = sum(w.counts.complexity for w in method_walkers)
    max_nesting = walker.counts.max_nesting

    field_names = _field_names(info)
    known = field_names | _local_names(callables)
    nosi = _static_invocations(walker, known, _static_method_names(info))

    type_params = walker.type_parameters
    cbo_types = {
        t for t in walker.referenced_types
        if t not in NON_COUPLING_TYPES and t not in type_params and t != info.name
    }
    for q in walker.qualified_refs:
        head = q.split(".")[0]
        if head[:1].isupper() and head not in known and head not in NON_COUPLING_TYPES and head != info.name:
            cbo_types.add(head)

    def mcount(pred):
        return sum(1 for m in callables if pred(m))

    def vis_m(v):
        return mcount(lambda m: _visibility(m.modifiers or set(), in_interface) == v)

    def fcount(pred):
        return sum(len(f.declarators) for f in field_decls if pred(f))

    def vis_f(v):
        return fcount(lambda f: _visibility(f.modifiers or set(), in_interface) == v)

    excluded = _nested_spans_within(unit, info.span, info)
    owned = _owned_token_indices(info.span, excluded)
    c = walker.counts
    return ClassMetrics(
        cbo=float(len(cbo_types)),
        wmc=float(wmc),
        rfc=float(len(callables) + len(walker.invoked_names)),
        lcom=float(_lcom(methods, field_names)),
        loc=float(_loc(unit, owned)),
        methods=float(len(callables)),
        public_methods=float(vis_m("public")),
        private_methods=float(vis_m("private")),
        protected_methods=float(vis_m("protected")),
        default_methods=float(vis_m("default")),
        static_methods=float(mcount(lambda m: "static" in (m.modifiers or set()))),
        abstract_methods=float(mcount(lambda m: _is_abstract(m, in_interface))),
        synchronized_methods=float(mcount(lambda m: "synchronized" in (m.modifiers or set()))),
        fields=float(fcount(lambda f: True)),
        public_fields=float(vis_f("public")),
        private_fields=float(vis_f("private")),
        protected_fields=float(vis_f("protected")),
        default_fields=float(vis_f("default")),
        static_fields=float(fcount(lambda f: "static" in (f.modifiers or set()))),
        final_fields=float(fcount(lambda f: "final" in (f.modifiers or set()))),
        synchronized_fields=float(fcount(lambda f: "synchronized" in (f.modifiers or set()))),
        static_invocations=float(nosi),
        return_qty=float(c.returns),
        loop_qty=float(c.loops),
        comparisons_qty=float(c.comparisons),
        try_catch_qty=float(c.try_catch),
        parenthesized_exps_qty=float(c.parenthesized),
        string_literals_qty=float(c.string_literals),
        numbers_qty=float(c.numbers),
        assignments_qty=float(c.assignments),
        math_operations_qty=float(c.math_operations),
        variables_qty=float(c.variables),
        max_nested_blocks=float(max_nesting),
        anonymous_classes_qty=float(c.anonymous_classes),
        inner_classes_qty=float(c.inner_classes),
        lambdas_qty=float(c.lambdas),
        unique_words_qty=float(_unique_words(unit, owned)),
    )


def method_metrics(unit: JavaUnit, method: MethodInfo) -> MethodMetrics:
    node = method.node
    _mark_selectors(node)
    walker = _walk_method(node)
    info = method.owner
    known = _field_names(info) | {d.name for d in ScopeResolver().run(node).declarations}
    nosi = _static_invocations(walker, known, _static_method_names(info))
    excluded = _nested_spans_within(unit, method.span, None)
    owned = _owned_token_indices(method.span, excluded)
    c = walker.counts
    return MethodMetrics(
        complexity=float(c.complexity),
        loc=float(_loc(unit, owned)),
        parameters=float(len(node.parameters or [])),
        return_qty=float(c.returns),
        loop_qty=float(c.loops),
        comparisons_qty=float(c.comparisons),
        try_catch_qty=float(c.try_catch),
        parenthesized_exps_qty=float(c.parenthesized),
        string_literals_qty=float(c.string_literals),
        numbers_qty=float(c.numbers),
        assignments_qty=float(c.assignments),
        math_operations_qty=float(c.math_operations),
        variables_qty=float(c.variables),
        max_nested_blocks=float(c.max_nesting),
        anonymous_classes_qty=float(c.anonymous_classes),
        inner_classes_qty=float(c.inner_classes),
        lambdas_qty=float(c.lambdas),
        unique_words_qty=float(_unique_words(unit, owned)),
        invocations_qty=float(c.invocations),
        static_invocations_qty=float(nosi),
    )


def method_variables(method: MethodInfo) -> list[Declaration]:
    """Parameters and locals declared in the method, in source order."""
    resolver = ScopeResolver().run(method.node)
    return [d for d in resolver.declarations if d.kind in ("param", "local")]


def variable_usage(method: MethodInfo, variable_name: str, occurrence: int = 0) -> VariableMetrics:
    resolver = ScopeResolver().run(method.node)
    matches = [d for d in resolver.declarations if d.name == variable_name]
    if len(matches) <= occurrence:
        raise VariableNotFound(f"{method.signature}: {variable_name}")
    target = matches[occurrence].index
    return VariableMetrics(float(sum(1 for _, decl in resolver.references if decl == target)))


def _unit(source: str | JavaUnit) -> JavaUnit:
    return source if isinstance(source, JavaUnit) else parse_java(source)


def extract_class_metrics(source: str | JavaUnit, class_name: str) -> ClassMetrics:
    unit = _unit(source)
    return class_metrics(unit, unit.find_type(class_name))


def extract_method_metrics(source: str | JavaUnit, class_name: str, method_signature: str) -> MethodMetrics:
    unit = _unit(source)
    info = unit.find_type(class_name)
    return method_metrics(unit, unit.find_method(info, method_signature))


def extract_variable_usage(
    source: str | JavaUnit,
    class_name: str,
    method_signature: str,
    variable_name: str,
    occurrence: int = 0,
) -> VariableMetrics:
    """Count uses of a variable within its scope, the declaration excluded.

    ``occurrence`` selects among several declarations of the same name in the
    method (sibling blocks, anonymous classes), in source order.
    """
    unit = _unit(source)
    info = unit.find_type(class_name)
    return variable_usage(unit.find_method(info, method_signature), variable_name, occurrence)
