"""
Finite-trace LTL and symbolic automaton tests
"""
import itertools
from copy import copy

import pytest
from hypothesis import given, settings, strategies as st

from engine.automaton import (
    abstract, accepts, build_automaton, build_for_scenario, quine_mccluskey, step_state_set, unabstract,
)
from engine.evaluator import RuntimeFault, eval_expr
from engine.ltlf import Monitor, eval_finite, formula_text, run_monitor, to_formula
from language.parser import parse_expression
from models.enums import FaultKind, Verdict
from models.formula import (
    TRUE, And, Atom, Finally, Globally, Iff, Implies, Next, Not, Or, Until,
)
from models.specification import Index, Literal, Name
from models.values import Record

A, B = Atom(Name("a")), Atom(Name("b"))


def valuation_holds(expr, valuation):
    return eval_expr(expr, valuation, {}) is True


formulas = st.recursive(
    st.sampled_from([A, B, TRUE]),
    lambda inner: st.one_of(
        inner.map(Not),
        inner.map(Next),
        inner.map(Finally),
        inner.map(Globally),
        st.tuples(inner, inner).map(lambda p: And(p)),
        st.tuples(inner, inner).map(lambda p: Or(p)),
        st.tuples(inner, inner).map(lambda p: Implies(*p)),
        st.tuples(inner, inner).map(lambda p: Iff(*p)),
        st.tuples(inner, inner).map(lambda p: Until(*p)),
    ),
    max_leaves=6,
)

traces = st.lists(st.fixed_dictionaries({Name("a"): st.booleans(), Name("b"): st.booleans()}),
                  min_size=1, max_size=6)

named_traces = st.lists(st.fixed_dictionaries({"a": st.booleans(), "b": st.booleans()}),
                        min_size=1, max_size=5)


class TestConversion:
    """Expressions to formulas"""

    def test_temporal_structure(self):
        f = to_formula(parse_expression("G(a => X b)"))
        assert f == Globally(Implies(A, Next(B)))
        assert formula_text(f) == "G (a => X b)"

    def test_temporal_free_subexpressions_are_atoms(self):
        f = to_formula(parse_expression("(a && b) U c"))
        assert f == Until(Atom(parse_expression("a && b")), Atom(Name("c")))

    def test_forall_expands_over_its_range(self):
        f = to_formula(parse_expression("forall i : 0..2 . G(x[i])"), {})
        assert f == And(tuple(Globally(Atom(Index(Name("x"), Literal(i)))) for i in range(3)))


class TestFiniteSemantics:
    """Reference evaluator"""

    def test_next_at_the_last_position_is_false(self):
        trace = [{Name("a"): True}]
        assert eval_finite(Next(A), trace) is False
        assert eval_finite(Not(Next(Not(A))), trace) is True

    def test_widened_next(self):
        trace = [{Name("a"): v} for v in (False, False, True)]
        assert eval_finite(Next(A), trace, c=1) is False
        assert eval_finite(Next(A), trace, c=2) is True

    def test_until(self):
        trace = [{Name("a"): True, Name("b"): False}, {Name("a"): True, Name("b"): False},
                 {Name("a"): False, Name("b"): True}]
        assert eval_finite(Until(A, B), trace) is True
        assert eval_finite(Until(A, B), trace[:2]) is False

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            eval_finite(A, [])
        with pytest.raises(IndexError):
            eval_finite(A, [{Name("a"): True}], i=1)
        with pytest.raises(ValueError):
            eval_finite(A, [{Name("a"): True}], c=0)


class TestMonitor:
    """Online monitoring"""

    def test_verdicts_are_absorbing(self):
        monitor = Monitor(Finally(A))
        assert monitor.verdict == Verdict.INCONCLUSIVE
        assert monitor.step({Name("a"): False}, valuation_by_key) == Verdict.INCONCLUSIVE
        assert monitor.step({Name("a"): True}, valuation_by_key) == Verdict.PASS
        assert monitor.step({Name("a"): False}, valuation_by_key) == Verdict.PASS
        assert monitor.finalize() == Verdict.PASS

    def test_globally_fails_early(self):
        verdicts, final = run_monitor(Globally(A), [{Name("a"): True}, {Name("a"): False}, {Name("a"): True}])
        assert verdicts == [Verdict.INCONCLUSIVE, Verdict.FAIL, Verdict.FAIL]
        assert final == Verdict.FAIL

    def test_empty_segment_passes(self):
        assert Monitor(Finally(A)).finalize() == Verdict.PASS

    def test_to_dict(self):
        monitor = Monitor(Globally(A), cycle=2, name="g")
        assert monitor.to_dict() == {'name': 'g', 'formula': 'G a', 'state': 'G a', 'cycle': 2, 'consumed': 0}

    @settings(max_examples=300, deadline=None)
    @given(formulas, traces, st.integers(min_value=1, max_value=3))
    def test_final_verdict_matches_reference(self, f, trace, c):
        verdicts, final = run_monitor(f, trace, c)
        expected = Verdict.PASS if eval_finite(f, trace, 0, c) else Verdict.FAIL
        assert final == expected
        for k, verdict in enumerate(verdicts):
            if verdict != Verdict.INCONCLUSIVE:
                assert all(v == verdict for v in verdicts[k:])
                assert verdict == final


def valuation_by_key(expr, valuation):
    return bool(valuation[expr])


class TestAutomaton:
    """Construction and acceptance"""

    def test_figure_automaton(self, figure_spec):
        aut = build_for_scenario(figure_spec.scenario("Figure"), spec=figure_spec)
        assert aut.initial == "s0"
        assert sorted(s.name for s in aut.states) == ["accept", "s0", "s1"]
        assert aut.accepting == {"accept"}
        assert sorted((t.src, t.dst) for t in aut.transitions) == [
            ("accept", "accept"), ("s0", "accept"), ("s0", "s1"), ("s1", "accept")]

    def test_figure_acceptance(self, figure_spec):
        aut = build_for_scenario(figure_spec.scenario("Figure"), spec=figure_spec)
        assert accepts(aut, [{"z": 1, "x": 17, "p0": 42}], valuation_holds)
        assert accepts(aut, [{"z": 0, "x": 42, "p0": 42}, {"z": 42, "x": 1, "p0": 42}], valuation_holds)
        assert not accepts(aut, [{"z": 0, "x": 42, "p0": 42}], valuation_holds)
        assert not accepts(aut, [{"z": 2, "x": 0, "p0": 42}], valuation_holds)
        assert not accepts(aut, [], valuation_holds)

    def test_abstraction_names_atoms_in_order(self):
        phi, amap = abstract(Until(Atom(parse_expression("x > 1")), Atom(parse_expression("y = 2"))))
        assert phi == Until(Atom(Name("p_0")), Atom(Name("p_1")))
        assert amap.to_dict() == {"p_0": "(x > 1)", "p_1": "(y = 2)"}

    def test_quine_mccluskey_merges_adjacent_minterms(self):
        assert quine_mccluskey(2, {2, 3}, set()) == [(True, None)]
        assert quine_mccluskey(2, {0, 1, 2, 3}, set()) == [(None, None)]
        assert quine_mccluskey(2, set(), set()) == []

    @settings(max_examples=200, deadline=None)
    @given(formulas, named_traces, st.integers(min_value=1, max_value=2))
    def test_acceptance_matches_reference(self, f, trace, c):
        phi_abs, amap = abstract(f)
        aut = build_automaton(phi_abs, amap, c=c)
        named = [{Name(k): v for k, v in valuation.items()} for valuation in trace]
        assert accepts(aut, trace, valuation_holds) == eval_finite(f, named, 0, c)


class TestFaultingAtoms:
    """Atoms that cannot be evaluated at the current position"""

    def test_guard_protects_a_deleted_object(self):
        monitor = Monitor(to_formula(parse_expression("G(r != null => (r.s = 1 => X(y = 1)))")))
        assert monitor.step({"r": Record.of(s=1), "y": 0}, valuation_holds) == Verdict.INCONCLUSIVE
        assert monitor.step({"r": None, "y": 1}, valuation_holds) == Verdict.INCONCLUSIVE
        assert monitor.step({"r": None, "y": 0}, valuation_holds) == Verdict.INCONCLUSIVE
        assert monitor.finalize() == Verdict.PASS

    def test_pending_obligation_survives_the_deletion(self):
        monitor = Monitor(to_formula(parse_expression("G(r != null => (r.s = 1 => X(y = 1)))")))
        monitor.step({"r": Record.of(s=1), "y": 0}, valuation_holds)
        assert monitor.step({"r": None, "y": 0}, valuation_holds) == Verdict.FAIL

    def test_unguarded_read_faults(self):
        monitor = Monitor(to_formula(parse_expression("G(r.s = 1)")))
        with pytest.raises(RuntimeFault) as excinfo:
            monitor.step({"r": None}, valuation_holds)
        assert excinfo.value.kind == FaultKind.NULL_DEREFERENCE


# ════════════════════════════════════════════════════════
# BOUNDED EXHAUSTIVE AGREEMENT
# ════════════════════════════════════════════════════════

UNARY = (Not, Next, Finally, Globally)
BINARY = (lambda l, r: And((l, r)), lambda l, r: Or((l, r)), Until)

LETTERS = [
    ({Name("a"): a, Name("b"): b}, {"a": a, "b": b})
    for a, b in itertools.product((False, True), repeat=2)
]


def formulas_up_to(depth):
    """Every formula over a and b with operator nesting at most depth"""
    found = {A, B}
    for _ in range(depth):
        below = sorted(found, key=formula_text)
        found |= {op(f) for op in UNARY for f in below}
        found |= {op(l, r) for op in BINARY for l in below for r in below}
    return sorted(found, key=formula_text)


def unary_chains(leaves, length):
    """leaves under every sequence of at most length unary operators"""
    result = list(leaves)
    for n in range(1, length + 1):
        for ops in itertools.product(UNARY, repeat=n):
            for leaf in leaves:
                f = leaf
                for op in reversed(ops):
                    f = op(f)
                result.append(f)
    return result


def all_traces(max_length):
    for n in range(1, max_length + 1):
        for letters in itertools.product(LETTERS, repeat=n):
            yield [named for named, _ in letters]


def assert_three_way_agreement(f, c, max_length):
    """eval_finite, the finalized monitor and automaton acceptance agree on every trace"""
    phi_abs, amap = abstract(f)
    aut = build_automaton(phi_abs, amap, c=c)

    def walk(trace, monitor, states):
        for named, keyed in LETTERS:
            extended = trace + [named]
            stepped = copy(monitor)
            stepped.step(named, valuation_by_key)
            reached = step_state_set(aut, states, keyed, valuation_holds)
            expected = eval_finite(f, extended, 0, c)
            context = f"{formula_text(f)} c={c} trace={[sorted(k for k, v in l.items() if v) for l in extended]}"
            assert (stepped.finalize() == Verdict.PASS) == expected, context
            assert bool(reached & aut.accepting) == expected, context
            if len(extended) < max_length:
                walk(extended, stepped, reached)

    walk([], Monitor(f, c), {aut.initial})


class TestExhaustiveAgreement:
    """Reference semantics, monitor and automaton on bounded inputs"""

    @pytest.mark.parametrize("c", [1, 2])
    def test_depth_two_short_traces(self, c):
        formulas = formulas_up_to(2)
        assert len(formulas) == 1542
        for f in formulas:
            assert_three_way_agreement(f, c, max_length=3)

    @pytest.mark.slow
    @pytest.mark.parametrize("c", [1, 2])
    def test_depth_three_long_traces(self, c):
        for f in unary_chains(formulas_up_to(1), 2):
            assert_three_way_agreement(f, c, max_length=5)

    @pytest.mark.parametrize("c", [1, 2])
    def test_derived_operators(self, c):
        for phi in formulas_up_to(1):
            for trace in all_traces(4):
                assert eval_finite(Finally(phi), trace, 0, c) == eval_finite(Until(TRUE, phi), trace, 0, c)
                assert eval_finite(Globally(phi), trace, 0, c) == eval_finite(Not(Finally(Not(phi))), trace, 0, c)
                assert run_monitor(Finally(phi), trace, c)[1] == run_monitor(Until(TRUE, phi), trace, c)[1]
                assert run_monitor(Globally(phi), trace, c)[1] == run_monitor(Not(Finally(Not(phi))), trace, c)[1]

    @pytest.mark.parametrize("text", ["G(a => X b)", "a U (b && X a)", "F(a) && G(b || X !a)"])
    def test_successors_distribute_over_union(self, text):
        f = to_formula(parse_expression(text))
        aut = build_automaton(*abstract(f), c=2)
        names = sorted(s.name for s in aut.states)
        subsets = [set(combo) for n in range(3) for combo in itertools.combinations(names, n)]
        for _, keyed in LETTERS:
            for left in subsets:
                for right in subsets:
                    union = step_state_set(aut, left | right, keyed, valuation_holds)
                    assert union == (step_state_set(aut, left, keyed, valuation_holds)
                                     | step_state_set(aut, right, keyed, valuation_holds))

    def test_abstraction_is_reversible(self):
        for f in formulas_up_to(2):
            assert unabstract(*abstract(f)) == f
        f = to_formula(parse_expression("G(x > 1 => X(y = 2)) && F(x > 1)"))
        phi_abs, amap = abstract(f)
        assert len(amap) == 2
        assert unabstract(phi_abs, amap) == f
