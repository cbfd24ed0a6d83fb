"""
Evaluator, constant and value tests
"""
import pytest

from engine.evaluator import (
    Env, RuntimeFault, check_constraints, constant_values, eval_expr, evaluate,
)
from language.parser import parse_expression
from models.enums import FaultKind
from models.values import (
    EnumLit, ObjectRef, Record, format_value, from_wire, location, to_wire, value_from_json,
    value_to_json,
)
from models.specification import TypeExpr


def ev(text, valuation=None, consts=None, spec=None):
    return eval_expr(parse_expression(text), valuation or {}, consts or {}, spec=spec)


def fault_of(text, valuation=None, spec=None) -> FaultKind:
    with pytest.raises(RuntimeFault) as excinfo:
        ev(text, valuation, spec=spec)
    return excinfo.value.kind


class TestEvaluate:
    """State expressions"""

    def test_arithmetic(self):
        assert ev("1 + 2 * 3") == 7
        assert ev("7 / 2") == 3.5
        assert ev("6 / 3") == 2
        assert isinstance(ev("6 / 3"), int)

    def test_set_operations(self):
        assert ev("{1, 2, 3} \\ {2}") == frozenset({1, 3})
        assert ev("{1} union {2}") == frozenset({1, 2})
        assert ev("#{i : 0..4 | i > 1}") == 3
        assert ev("min {3, 1, 2}") == 1

    def test_numeric_equality_ignores_representation(self):
        assert ev("x in {1, 2}", {"x": 2.0}) is True
        assert ev("x = 2", {"x": 2.0}) is True

    def test_enum_literals(self, rover_spec):
        status = EnumLit("Status", "atDst", 4)
        assert ev("s = atDst", {"s": status}, spec=rover_spec) is True
        assert ev("s in {stuck, fault}", {"s": status}, spec=rover_spec) is False

    def test_lookup_order(self):
        assert ev("n", {"n": 1}, {"n": 2}) == 1
        assert ev("n", {}, {"n": 2}) == 2

    def test_object_parameters(self):
        valuation = {"coll.r[0].s": 5, "coll.cc.cmd[1]": 7}
        env = Env(valuation, {}, {"r": ObjectRef("coll.r[0]", "Rover"), "cc": ObjectRef("coll.cc", "CommandCentre")})
        assert evaluate(parse_expression("r.s"), env) == 5
        assert evaluate(parse_expression("cc.cmd[1]"), env) == 7

    def test_null_elements_are_excluded_from_comprehensions(self):
        r = (None, Record.of(v=1))
        assert ev("{i : 0..1 | r[i].v > 0}", {"r": r}) == frozenset({1})

    def test_popfront_records_the_rest(self):
        env = Env({"xs": (1, 2)}, {})
        assert evaluate(parse_expression("popfront(xs)"), env) == 1
        assert env.effects == {"xs": (2,)}

    def test_native_functions(self, rover_spec):
        valuation = {"a": location(0, 0), "b": location(0, 1), "c": location(1, 1)}
        assert ev("isCloseTo(a, b)", valuation, spec=rover_spec) is True
        assert ev("isCloseTo(a, c)", valuation, spec=rover_spec) is False

    def test_epsilon_constant_widens_closeness(self, rover_spec):
        valuation = {"a": location(0, 0), "c": location(1, 1)}
        assert ev("isCloseTo(a, c)", valuation, {"epsilon": 2.0}, spec=rover_spec) is True


class TestFaults:
    """Runtime fault kinds"""

    def test_division_by_zero(self):
        assert fault_of("1 / 0") == FaultKind.DIVISION_BY_ZERO

    def test_empty_set_minimum(self):
        assert fault_of("min {}") == FaultKind.EMPTY_SET

    def test_null_dereference(self):
        assert fault_of("x.y", {"x": None}) == FaultKind.NULL_DEREFERENCE

    def test_index_range(self):
        assert fault_of("xs[3]", {"xs": (1, 2)}) == FaultKind.INDEX_RANGE

    def test_unbound_symbol(self):
        assert fault_of("nowhere") == FaultKind.UNBOUND_SYMBOL

    def test_empty_popfront(self):
        assert fault_of("popfront(xs)", {"xs": ()}) == FaultKind.EMPTY_LIST

    def test_temporal_operator_in_state_expression(self):
        assert fault_of("G a", {"a": True}) == FaultKind.TYPE_ERROR

    def test_fault_serializes(self):
        fault = RuntimeFault(FaultKind.FRAME_VIOLATION, "write outside frame", "coll.r[0].pos")
        assert fault.to_dict() == {'kind': 'FRAME-VIOLATION', 'message': 'write outside frame',
                                   'symbol': 'coll.r[0].pos'}


class TestConstants:
    """Global constants and constraints"""

    def test_declared_values(self, rover_consts):
        assert (rover_consts["n"], rover_consts["m"], rover_consts["k"]) == (3, 3, 2)
        assert rover_consts["targetDst"] == Record.of(x=5.0, y=7.0)
        assert rover_consts["allIds"] == ("item1", "item2", "item3")
        assert len(rover_consts["exclusionZone"]) == 1
        assert len(rover_consts["startPos"]) == 3

    def test_overrides(self, rover_spec):
        consts = constant_values(rover_spec, {"m": 2, "allIds": ["item1", "item2"]})
        assert consts["m"] == 2
        assert check_constraints(rover_spec, consts) == []

    def test_violated_constraint(self, rover_spec):
        consts = constant_values(rover_spec, {"k": 5})
        assert check_constraints(rover_spec, consts) == ["((k <= m) && (m <= n))"]

    def test_unknown_override(self, rover_spec):
        with pytest.raises(RuntimeFault) as excinfo:
            constant_values(rover_spec, {"bogus": 1})
        assert excinfo.value.kind == FaultKind.UNBOUND_SYMBOL

    def test_lenient_mode_leaves_constants_unbound(self, rover_spec):
        consts = constant_values(rover_spec, {"targetDst": {"x": 1.0}}, strict=False)
        assert "targetDst" not in consts
        assert consts["n"] == 3


class TestValues:
    """Value conversion and formatting"""

    def test_typed_json(self, rover_spec):
        value = value_from_json({"x": 5, "y": 1}, TypeExpr.named("Location"), rover_spec)
        assert value == location(5, 1)
        assert value_to_json(value) == {"x": 5.0, "y": 1.0}

    def test_enum_from_json(self, rover_spec):
        assert value_from_json("atDst", TypeExpr.named("Status"), rover_spec) == EnumLit("Status", "atDst", 4)
        with pytest.raises(ValueError):
            value_from_json("flying", TypeExpr.named("Status"), rover_spec)

    def test_wire_encoding_keeps_sets_and_enums(self):
        value = (frozenset({EnumLit("Status", "stuck", 2)}), Record.of(x=1.0, y=2.0), ObjectRef("coll.r[0]", "Rover"))
        assert from_wire(to_wire(value)) == value

    def test_format_value(self):
        assert format_value(location(5, 1)) == "(5,1)"
        assert format_value(location(4.5, 1)) == "(4.5,1)"
        assert format_value(None) == "null"
        assert format_value(frozenset({2, 1})) == "{1, 2}"
