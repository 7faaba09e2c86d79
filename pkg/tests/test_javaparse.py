import pytest

from refpred.errors import ClassNotFound, MethodNotFound, ParseError
from refpred.javaparse import ParenthesizedExpression, parse_java

SOURCE = """package a.b;

import java.util.List;

public class Outer {
    int x = (1 + 2) * 3;

    Outer(int x) { this.x = x; }

    void run(String[] args, List<String> names, int... rest) {
        class Local { int y; }
        Runnable r = new Runnable() { public void run() {} };
    }

    static class Inner {
        enum Mode { ON, OFF }
        int twice(int v) { return (v) * 2; }
    }
}

interface Shape { double area(); }
"""


@pytest.fixture(scope="module")
def unit():
    return parse_java(SOURCE)


class TestTypes:
    def test_fully_qualified_names(self, unit):
        assert [t.fqn for t in unit.types] == [
            "a.b.Outer", "a.b.Outer.Local", "a.b.Outer.Inner", "a.b.Outer.Inner.Mode", "a.b.Shape"]
        assert unit.package == "a.b"

    def test_lookup_forms(self, unit):
        assert unit.find_type("a.b.Outer.Inner").fqn == "a.b.Outer.Inner"
        assert unit.find_type("Outer.Inner").fqn == "a.b.Outer.Inner"
        assert unit.find_type("Shape").is_interface
        with pytest.raises(ClassNotFound):
            unit.find_type("Nope")

    def test_nested_spans_inside_parent(self, unit):
        outer = unit.find_type("a.b.Outer")
        inner = unit.find_type("a.b.Outer.Inner")
        assert outer.span[0] < inner.span[0] and inner.span[1] <= outer.span[1]
        assert inner.span in outer.nested_spans


class TestMethods:
    def test_signatures(self, unit):
        sigs = [m.signature for m in unit.methods_of(unit.find_type("a.b.Outer"))]
        assert sigs == ["Outer(int)", "run(String[],List,int[])"]

    def test_find_method(self, unit):
        info = unit.find_type("a.b.Outer.Inner")
        assert unit.find_method(info, "twice(int)").name == "twice"
        assert unit.find_method(info, "twice").name == "twice"
        with pytest.raises(MethodNotFound):
            unit.find_method(info, "thrice(int)")


class TestParentheses:
    def test_parenthesized_nodes_kept(self, unit):
        found = [node for _, node in unit.tree.filter(ParenthesizedExpression)]
        assert len(found) == 2

    def test_conditions_are_not_parenthesized_expressions(self):
        u = parse_java("class C { void f(int a) { if (a > 0) { while (a < 9) { a++; } } } }")
        assert not list(u.tree.filter(ParenthesizedExpression))

    def test_cast_is_not_parenthesized_expression(self):
        u = parse_java("class C { long f(int a) { return (long) a; } }")
        assert not list(u.tree.filter(ParenthesizedExpression))


class TestErrors:
    def test_syntax_error_position(self):
        with pytest.raises(ParseError) as info:
            parse_java("class C {\n  void f( {\n}")
        assert info.value.position is not None and info.value.position[0] == 2

    def test_lexer_error(self):
        with pytest.raises(ParseError):
            parse_java('class C { String s = "unterminated; }')

    def test_truncated(self):
        with pytest.raises(ParseError):
            parse_java("class C {")
