"""
Lexer, parser, renderer and typechecker tests
"""
import pytest
from hypothesis import given, settings, strategies as st

from language.lexer import tokenize
from language.parser import ParseError, parse, parse_expression
from language.render import render, render_expr
from language.typecheck import typecheck
from models.specification import Binary, Field, Forall, Index, Literal, Name, Specification, Unary
from tests.conftest import load_spec


FRAGMENTS = [
    "enum", "end", "type", "object", "elementary", "scenario", "systemtest", "instance", "global", "const",
    "function", "spec", "cndact", "x", "E", ":", ";", "=", ":=", "{", "}", "(", ")", "[", "]", ",", "1", "2.5",
    "G", "X", "U", "&&", "=>", "--", "\n", "@", "record", "int",
]


def errors_of(source: str):
    spec = load_spec(source)
    return [d.message for d in typecheck(spec) if d.is_error]


class TestLexer:
    """Token stream and lexical diagnostics"""

    def test_operators_take_the_longest_match(self):
        tokens, diagnostics = tokenize("a <=> b => c <= d")
        assert diagnostics == []
        assert [t.type for t in tokens] == ["IDENT", "IFF", "IDENT", "IMPLIES", "IDENT", "LE", "IDENT", "EOF"]

    def test_range_is_not_a_real_literal(self):
        tokens, _ = tokenize("0..3 1.5")
        assert [(t.type, t.value) for t in tokens[:-1]] == [("INT", 0), ("DOTDOT", ".."), ("INT", 3), ("REAL", 1.5)]

    def test_keywords_and_comments(self):
        tokens, _ = tokenize("-- a comment\nG x U y")
        assert [t.type for t in tokens] == ["G", "IDENT", "U", "IDENT", "EOF"]
        assert tokens[0].span.start_line == 2

    def test_columns_are_one_based(self):
        tokens, _ = tokenize("ab  cd")
        assert tokens[1].span.start_col == 5
        assert tokens[1].span.end_col == 6

    def test_unexpected_character(self):
        tokens, diagnostics = tokenize("x @ y", "f.scsl")
        assert [t.type for t in tokens] == ["IDENT", "IDENT", "EOF"]
        assert len(diagnostics) == 1
        assert diagnostics[0].message == "unexpected character '@'"
        assert (diagnostics[0].span.file, diagnostics[0].span.start_col) == ("f.scsl", 3)


class TestExpressions:
    """Operator precedence and associativity"""

    def test_multiplication_binds_tighter(self):
        assert parse_expression("a + b * c") == Binary("+", Name("a"), Binary("*", Name("b"), Name("c")))

    def test_chained_comparison_is_a_conjunction(self):
        expected = Binary("&&", Binary("<=", Name("k"), Name("m")), Binary("<=", Name("m"), Name("n")))
        assert parse_expression("k <= m <= n") == expected

    def test_until_and_implication_are_right_associative(self):
        assert parse_expression("a U b U c") == Binary("U", Name("a"), Binary("U", Name("b"), Name("c")))
        assert parse_expression("a => b => c") == Binary("=>", Name("a"), Binary("=>", Name("b"), Name("c")))

    def test_temporal_prefix(self):
        assert parse_expression("X !active") == Unary("X", Unary("!", Name("active")))

    def test_literals(self):
        assert parse_expression("null") == Literal(None)
        assert parse_expression('"item1"') == Literal("item1")
        assert parse_expression("true") == Literal(True)

    def test_render_parenthesizes(self):
        assert render_expr(parse_expression("a || b && c")) == "(a || (b && c))"

    def test_incomplete_expression(self):
        with pytest.raises(ParseError) as excinfo:
            parse_expression("a +")
        assert excinfo.value.message == "expected expression, found end of input"

    def test_forall_separator(self):
        expr = parse_expression("forall i : 0..(n - 1) . G(x[i] = 1)")
        assert isinstance(expr, Forall)
        assert (expr.var, expr.lo, expr.hi) == ("i", Literal(0), Binary("-", Name("n"), Literal(1)))
        assert expr.body == Unary("G", Binary("=", Index(Name("x"), Name("i")), Literal(1)))

    def test_field_access_is_not_a_forall_separator(self):
        assert parse_expression("r.pos.x") == Field(Field(Name("r"), "pos"), "x")

    def test_spans_cover_the_whole_expression(self):
        expr = parse_expression("a && bb")
        assert (expr.span.start_col, expr.span.end_col) == (1, 7)

    def test_trailing_tokens(self):
        with pytest.raises(ParseError):
            parse_expression("a b")


class TestParser:
    """Declarations and syntax diagnostics"""

    def test_figure_specification(self, figure_spec):
        scenario = figure_spec.scenario("Figure")
        assert [p.name for p in scenario.params] == ["z", "x", "p0"]
        assert len(scenario.specs) == 1
        assert figure_spec.instance("figure").bindings[0][0] == "p0"
        assert figure_spec.systemtest is None

    def test_rover_specification(self, rover_spec):
        assert rover_spec.systemtest.name == "RoverSalvage"
        assert rover_spec.enum("Status").literals[0] == "initial"
        assert rover_spec.object_type("Rover").cycletime == 20
        assert [c.name for c in rover_spec.constants.entries][:3] == ["n", "m", "k"]
        assert len(rover_spec.constants.constraints) == 3
        assert rover_spec.function("inExclusionZone").external
        assert not rover_spec.function("numRovers").external
        assert rover_spec.scenario("Approach").params[1].const

    def test_empty_source(self):
        assert parse("") == Specification()

    def test_expected_token_message(self):
        result = parse("enum\n  E : { a, b ;\nend enum\n")
        assert isinstance(result, list)
        assert result[0].message == "expected ',' or '}', found ';'"
        assert result[0].span.start_line == 2

    def test_duplicate_declarations(self):
        result = parse("enum\n  E : { a };\n  E : { b };\nend enum\n")
        assert [d.message for d in result] == ["duplicate declaration of type 'E'"]

    def test_duplicate_enum_literal(self):
        result = parse("enum\n  E : { a, a };\nend enum\n")
        assert [d.message for d in result] == ["duplicate enum literal 'a'"]

    def test_recovers_at_the_next_declaration(self):
        result = parse("type A = ;\ntype B = ;\n")
        assert [d.span.start_line for d in result] == [1, 2]
        assert all(d.message == "expected type, found ';'" for d in result)

    def test_diagnostics_are_sorted(self):
        result = parse("type A = ;\nenum\n  E : { a, a };\nend enum\n")
        lines = [d.span.start_line for d in result]
        assert lines == sorted(lines)

    def test_zero_cycletime(self):
        result = parse("object type T(in x : int)\n  cycletime 0\nend type\n")
        assert [d.message for d in result] == ["cycletime must be at least 1"]

    def test_recovers_inside_a_block(self):
        source = ("global const\n  a : nat := ;\n  b : nat := 2;\nend const\n"
                  "enum\n  E : { a, a };\nend enum\n")
        result = parse(source)
        assert [(d.span.start_line, d.message) for d in result] == [
            (2, "expected expression, found ';'"),
            (6, "duplicate enum literal 'a'"),
        ]

    def test_unterminated_block(self):
        result = parse("enum\n  E : { a }\n")
        assert [d.message for d in result] == ["expected ';', 'end' or identifier, found end of input"]

    def test_error_inside_a_scenario_resumes_after_it(self):
        source = ("enum\n  E : { a };\nend enum\n"
                  "elementary scenario S(z : E)\n  spec G(z = a;\nend scenario\n"
                  "type T = int;\n")
        result = parse(source)
        assert [d.span.start_line for d in result] == [5]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from(FRAGMENTS), max_size=30))
    def test_any_token_sequence_yields_a_result(self, fragments):
        result = parse(" ".join(fragments))
        assert isinstance(result, (Specification, list))
        if isinstance(result, list):
            assert any(d.is_error for d in result)


class TestRender:
    """Serialization back to SCSL"""

    def test_rover_round_trip(self, rover_spec):
        text = render(rover_spec)
        reparsed = parse(text)
        assert reparsed == rover_spec
        assert render(reparsed) == text

    def test_figure_round_trip(self, figure_spec):
        assert parse(render(figure_spec)) == figure_spec

    def test_empty_specification(self):
        assert render(Specification()) == ""


class TestTypecheck:
    """Static checks"""

    def test_bundled_specifications_are_well_formed(self, rover_spec, figure_spec):
        assert [str(d) for d in typecheck(rover_spec) if d.is_error] == []
        assert [str(d) for d in typecheck(figure_spec) if d.is_error] == []

    def test_enum_typed_parameter_resolves(self, rover_spec):
        status = rover_spec.object_type("Rover").param("s")
        resolved = rover_spec.resolve_type(status.type)
        assert (resolved.kind, resolved.name) == ("enum", "Status")
        assert rover_spec.enum("Status").literals[0] == "initial"

    def test_unknown_type(self):
        assert errors_of("type A = Foo;\n") == ["unknown type 'Foo'"]

    def test_violated_constant_constraint(self):
        source = ("global const\n  a : nat := 3;\n  b : nat := 2;\n"
                  "  constraint a <= b end constraint\nend const\n")
        assert errors_of(source) == ["constant constraint violated: (a <= b)"]

    def test_object_parameter_needs_direction(self):
        assert errors_of("object type T(x : int)\nend type\n") == ["parameter 'x' of T needs a direction"]

    def test_interface_direction(self):
        source = ("object type Dev(in cmd : int, out s : int)\n  cycletime 1\nend type\n"
                  "elementary scenario Idle(d : Dev)\nend scenario\n"
                  "systemtest T\n  collaboration coll\n    a : Dev;\n    b : Dev;\n"
                  "    interface Ia from a.cmd to b.cmd;\n"
                  "    interface Ib from a.s to b.s;\n"
                  "  end collaboration\n  schedule\n    Idle(coll.a)\n  end schedule\nend systemtest\n")
        assert errors_of(source) == ["interface source must be an out parameter",
                                     "interface target must be an in parameter"]

    def test_assignment_to_a_constant(self):
        source = ("global const\n  n : nat := 1;\nend const\n"
                  "elementary scenario S(z : int)\n  initact n := 2;\nend scenario\n")
        assert errors_of(source) == ["cannot assign to global constant 'n'"]

    def test_unknown_symbol(self):
        source = "elementary scenario S(z : int)\n  spec G(z = w);\nend scenario\n"
        assert errors_of(source) == ["unknown symbol 'w'"]

    def test_non_boolean_spec(self):
        source = "elementary scenario S(z : int)\n  spec z + 1;\nend scenario\n"
        assert errors_of(source) == ["expected a boolean expression, found int"]
