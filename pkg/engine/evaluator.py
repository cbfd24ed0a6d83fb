"""
Expression Evaluator
Evaluates quantifier-free SCSL expressions over a valuation

Features:
- Lookup order: locals, valuation, global constants, enum literals
- Object parameters addressed by fully qualified symbols (coll.r[2].pos)
- Reference mode for assignment targets and frame sets
- Native functions inExclusionZone and isCloseTo
- Distinct runtime fault kinds
"""
from typing import Any, Callable, Dict, Mapping, Optional

from config import EPSILON_CLOSE
from engine.geometry import in_exclusion_zone, is_close_to
from models.enums import FaultKind
from models.specification import (
    Binary, Call, Comprehension, Expr, Field, Forall, Index, ListLit, Literal, Name, Range,
    RecordLit, SetLit, Specification, Unary,
)
from models.values import (
    CollabRef, EnumLit, ObjectRef, Record, format_value, sorted_values, value_from_json,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)


class RuntimeFault(Exception):
    """A runtime error of the evaluator or the engine"""

    def __init__(self, kind: FaultKind, message: str, symbol: Optional[str] = None):
        super().__init__(f"{kind.value}: {message}")
        self.kind = kind
        self.message = message
        self.symbol = symbol

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'message': self.message, 'symbol': self.symbol}


UNSET = object()


class Env:
    """
    Evaluation environment.

    Args:
        valuation: Symbol -> value map of the current tick
        consts: Global constant values
        locals_: Scenario parameters, auxiliary variables and bound variables
        spec: Specification for enum literals and global functions
        on_unknown: Hook called with a symbol that has no value; returns a
            value or raises (symbolic exploration uses it)
    """

    def __init__(self, valuation: Mapping[str, Any], consts: Mapping[str, Any],
                 locals_: Optional[Dict[str, Any]] = None, spec: Optional[Specification] = None,
                 on_unknown: Optional[Callable[[str], Any]] = None):
        self.valuation = valuation
        self.consts = consts
        self.locals = dict(locals_ or {})
        self.spec = spec or Specification()
        self.on_unknown = on_unknown
        self.effects: Dict[str, Any] = {}

    def bind(self, name: str, value: Any) -> "Env":
        child = Env(self.valuation, self.consts, self.locals, self.spec, self.on_unknown)
        child.locals[name] = value
        child.effects = self.effects
        return child

    @property
    def epsilon(self) -> float:
        eps = self.consts.get("epsilon")
        return float(eps) if isinstance(eps, (int, float)) and not isinstance(eps, bool) else EPSILON_CLOSE

    def symbol(self, name: str) -> Any:
        if name in self.valuation:
            return self.valuation[name]
        if self.on_unknown is not None:
            return self.on_unknown(name)
        raise RuntimeFault(FaultKind.UNBOUND_SYMBOL, f"no value for '{name}'", name)


# ════════════════════════════════════════════════════════
# EVALUATION
# ════════════════════════════════════════════════════════

def evaluate(expr: Expr, env: Env) -> Any:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, Name):
        return _name(expr.name, env)
    if isinstance(expr, Field):
        return _field(evaluate(expr.base, env), expr.name, env)
    if isinstance(expr, Index):
        return _index(expr, env)
    if isinstance(expr, Call):
        return _call(expr, env)
    if isinstance(expr, Unary):
        return _unary(expr, env)
    if isinstance(expr, Binary):
        return _binary(expr, env)
    if isinstance(expr, SetLit):
        return frozenset(evaluate(e, env) for e in expr.elements)
    if isinstance(expr, ListLit):
        return tuple(evaluate(e, env) for e in expr.elements)
    if isinstance(expr, RecordLit):
        return Record.from_mapping({n: evaluate(v, env) for n, v in expr.items})
    if isinstance(expr, Range):
        lo, hi = _int(evaluate(expr.lo, env)), _int(evaluate(expr.hi, env))
        return frozenset(range(lo, hi + 1))
    if isinstance(expr, Comprehension):
        result = set()
        for _, inner in _comprehension_bindings(expr, env):
            for element in expr.elements:
                result.add(evaluate(element, inner))
        return frozenset(result)
    if isinstance(expr, Forall):
        lo, hi = _int(evaluate(expr.lo, env)), _int(evaluate(expr.hi, env))
        return all(_bool(evaluate(expr.body, env.bind(expr.var, i)), expr.body) for i in range(lo, hi + 1))
    raise RuntimeFault(FaultKind.TYPE_ERROR, f"cannot evaluate {type(expr).__name__}")


def _name(name: str, env: Env) -> Any:
    if name in env.locals:
        return env.locals[name]
    if name in env.valuation:
        return env.valuation[name]
    if name in env.consts:
        return env.consts[name]
    enum = env.spec.enum_of_literal(name)
    if enum is not None:
        return EnumLit(enum.name, name, enum.literals.index(name))
    return env.symbol(name)


def _field(base: Any, name: str, env: Env) -> Any:
    if base is None:
        raise RuntimeFault(FaultKind.NULL_DEREFERENCE, f"field '{name}' of null")
    if isinstance(base, Record):
        if not base.has(name):
            raise RuntimeFault(FaultKind.TYPE_ERROR, f"record has no field '{name}'")
        return base.get(name)
    if isinstance(base, CollabRef):
        return env.symbol(f"{base.name}.{name}")
    if isinstance(base, ObjectRef):
        symbol = f"{base.path}.{name}"
        if symbol in env.valuation:
            return env.valuation[symbol]
        elements = []
        while f"{symbol}[{len(elements)}]" in env.valuation:
            elements.append(env.valuation[f"{symbol}[{len(elements)}]"])
        if elements:
            return tuple(elements)
        return env.symbol(symbol)
    raise RuntimeFault(FaultKind.TYPE_ERROR, f"cannot select '{name}' from {format_value(base)}")


def _index(expr: Index, env: Env) -> Any:
    position = _int(evaluate(expr.index, env))
    if isinstance(expr.base, Field):
        owner = evaluate(expr.base.base, env)
        if isinstance(owner, ObjectRef):
            symbol = f"{owner.path}.{expr.base.name}[{position}]"
            if symbol in env.valuation:
                return env.valuation[symbol]
        base = _field(owner, expr.base.name, env)
    else:
        base = evaluate(expr.base, env)
    if base is None:
        raise RuntimeFault(FaultKind.NULL_DEREFERENCE, "index into null")
    if not isinstance(base, tuple):
        raise RuntimeFault(FaultKind.TYPE_ERROR, f"cannot index {format_value(base)}")
    if not 0 <= position < len(base):
        raise RuntimeFault(FaultKind.INDEX_RANGE, f"index {position} outside 0..{len(base) - 1}")
    return base[position]


def _comprehension_bindings(expr: Comprehension, env: Env):
    source = evaluate(expr.source, env)
    if source is None:
        raise RuntimeFault(FaultKind.NULL_DEREFERENCE, "comprehension over null")
    items = sorted_values(source) if isinstance(source, frozenset) else list(source)
    for item in items:
        inner = env.bind(expr.var, item)
        if expr.predicate is not None:
            try:
                if not _bool(evaluate(expr.predicate, inner), expr.predicate):
                    continue
            except RuntimeFault as fault:
                # an element whose predicate dereferences null is excluded
                if fault.kind != FaultKind.NULL_DEREFERENCE:
                    raise
                continue
        yield item, inner


def _unary(expr: Unary, env: Env) -> Any:
    op = expr.op
    if op in ("G", "F", "X"):
        raise RuntimeFault(FaultKind.TYPE_ERROR, f"temporal operator {op} in a state expression")
    value = evaluate(expr.operand, env)
    if op == "!":
        return not _bool(value, expr.operand)
    if op == "-":
        return -_number(value)
    if op == "#":
        if value is None:
            raise RuntimeFault(FaultKind.NULL_DEREFERENCE, "cardinality of null")
        return len(value)
    if op == "min":
        return _min(value)
    raise RuntimeFault(FaultKind.TYPE_ERROR, f"unknown operator {op}")


def _binary(expr: Binary, env: Env) -> Any:
    op = expr.op
    if op == "&&":
        return _bool(evaluate(expr.left, env), expr.left) and _bool(evaluate(expr.right, env), expr.right)
    if op == "||":
        return _bool(evaluate(expr.left, env), expr.left) or _bool(evaluate(expr.right, env), expr.right)
    if op == "=>":
        return (not _bool(evaluate(expr.left, env), expr.left)) or _bool(evaluate(expr.right, env), expr.right)
    if op == "<=>":
        return _bool(evaluate(expr.left, env), expr.left) == _bool(evaluate(expr.right, env), expr.right)
    if op == "U":
        raise RuntimeFault(FaultKind.TYPE_ERROR, "temporal operator U in a state expression")

    left = evaluate(expr.left, env)
    right = evaluate(expr.right, env)
    if op == "=":
        return values_equal(left, right)
    if op == "!=":
        return not values_equal(left, right)
    if op in ("<", "<=", ">", ">="):
        a, b = _number(left), _number(right)
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
    if op in ("+", "-", "*"):
        a, b = _number(left), _number(right)
        return {"+": a + b, "-": a - b, "*": a * b}[op]
    if op == "/":
        a, b = _number(left), _number(right)
        if b == 0:
            raise RuntimeFault(FaultKind.DIVISION_BY_ZERO, f"{format_value(left)} / 0")
        if isinstance(a, int) and isinstance(b, int) and a % b == 0:
            return a // b
        return a / b
    if op == "in":
        if right is None:
            raise RuntimeFault(FaultKind.NULL_DEREFERENCE, "membership test in null")
        return any(values_equal(left, item) for item in right)
    if op in ("union", "inter", "\\"):
        a, b = _set(left), _set(right)
        return {"union": a | b, "inter": a & b, "\\": a - b}[op]
    raise RuntimeFault(FaultKind.TYPE_ERROR, f"unknown operator {op}")


def _call(expr: Call, env: Env) -> Any:
    func = expr.func
    decl = env.spec.function(func)
    if decl is None and func == "popfront":
        return _popfront(expr, env)
    args = [evaluate(a, env) for a in expr.args]
    if decl is None:
        if func in ("min", "max"):
            return _min(args[0]) if func == "min" else _max(args[0])
        if func == "abs":
            return abs(_number(args[0]))
        raise RuntimeFault(FaultKind.UNBOUND_SYMBOL, f"unknown function '{func}'", func)
    if decl.external:
        native = NATIVE_FUNCTIONS.get(func)
        if native is None:
            raise RuntimeFault(FaultKind.UNBOUND_SYMBOL, f"no native implementation of '{func}'", func)
        return native(env, *args)
    inner = Env(env.valuation, env.consts, {p.name: a for p, a in zip(decl.params, args)},
                env.spec, env.on_unknown)
    return evaluate(decl.body, inner)


def _popfront(expr: Call, env: Env) -> Any:
    """Return the list head; the rest is recorded in env.effects for rebinding"""
    arg = expr.args[0]
    name = arg.name if isinstance(arg, Name) else None
    current = env.effects.get(name, UNSET) if name else UNSET
    values = evaluate(arg, env) if current is UNSET else current
    if not values:
        raise RuntimeFault(FaultKind.EMPTY_LIST, "popfront of an empty list", name)
    head, rest = popfront(values)
    if name:
        env.effects[name] = rest
    return head


def popfront(values) -> tuple:
    """(head, rest) of a non-empty list"""
    if not values:
        raise RuntimeFault(FaultKind.EMPTY_LIST, "popfront of an empty list")
    values = tuple(values)
    return values[0], values[1:]


# ════════════════════════════════════════════════════════
# VALUE HELPERS
# ════════════════════════════════════════════════════════

def values_equal(a: Any, b: Any) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if isinstance(a, Record) and isinstance(b, Record):
        if sorted(k for k, _ in a.items) != sorted(k for k, _ in b.items):
            return False
        return all(values_equal(v, b.get(k)) for k, v in a.items)
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    return a == b


def _bool(value: Any, expr: Optional[Expr] = None) -> bool:
    if isinstance(value, bool):
        return value
    if value is None:
        raise RuntimeFault(FaultKind.NULL_DEREFERENCE, "null used as a condition")
    raise RuntimeFault(FaultKind.TYPE_ERROR, f"expected a boolean, got {format_value(value)}")


def _number(value: Any):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if value is None:
            raise RuntimeFault(FaultKind.NULL_DEREFERENCE, "arithmetic on null")
        raise RuntimeFault(FaultKind.TYPE_ERROR, f"expected a number, got {format_value(value)}")
    return value


def _int(value: Any) -> int:
    number = _number(value)
    if isinstance(number, float):
        if not number.is_integer():
            raise RuntimeFault(FaultKind.TYPE_ERROR, f"expected an integer, got {number}")
        return int(number)
    return number


def _set(value: Any) -> frozenset:
    if value is None:
        raise RuntimeFault(FaultKind.NULL_DEREFERENCE, "set operation on null")
    return frozenset(value)


def _min(value: Any):
    if not value:
        raise RuntimeFault(FaultKind.EMPTY_SET, "min of an empty set")
    return sorted_values(value)[0]


def _max(value: Any):
    if not value:
        raise RuntimeFault(FaultKind.EMPTY_SET, "max of an empty set")
    return sorted_values(value)[-1]


# ════════════════════════════════════════════════════════
# NATIVES
# ════════════════════════════════════════════════════════

def _native_in_exclusion_zone(env: Env, pos: Any, zones: Any) -> bool:
    if pos is None:
        raise RuntimeFault(FaultKind.NULL_DEREFERENCE, "inExclusionZone of null position")
    return in_exclusion_zone(pos, zones or ())


def _native_is_close_to(env: Env, a: Any, b: Any) -> bool:
    if a is None or b is None:
        raise RuntimeFault(FaultKind.NULL_DEREFERENCE, "isCloseTo of null position")
    return is_close_to(a, b, env.epsilon)


NATIVE_FUNCTIONS: Dict[str, Callable[..., Any]] = {
    "inExclusionZone": _native_in_exclusion_zone,
    "isCloseTo": _native_is_close_to,
}


# ════════════════════════════════════════════════════════
# REFERENCES
# ════════════════════════════════════════════════════════

def reference(expr: Expr, env: Env) -> str:
    """
    Fully qualified symbol denoted by an object parameter expression,
    e.g. cc.cmd[i] -> 'coll.cc.cmd[0]'.
    """
    if isinstance(expr, Field):
        owner = evaluate(expr.base, env)
        if owner is None:
            raise RuntimeFault(FaultKind.NULL_DEREFERENCE, f"reference to '{expr.name}' of null")
        if isinstance(owner, (ObjectRef, CollabRef)):
            root = owner.path if isinstance(owner, ObjectRef) else owner.name
            return f"{root}.{expr.name}"
    if isinstance(expr, Index) and isinstance(expr.base, Field):
        return f"{reference(expr.base, env)}[{_int(evaluate(expr.index, env))}]"
    raise RuntimeFault(FaultKind.TYPE_ERROR, "expression does not denote an object parameter")


def references(expr: Expr, env: Env) -> frozenset:
    """Symbol set denoted by a frame expression"""
    if isinstance(expr, SetLit):
        return frozenset(reference(e, env) for e in expr.elements)
    if isinstance(expr, Comprehension):
        result = set()
        for _, inner in _comprehension_bindings(expr, env):
            result.update(reference(e, inner) for e in expr.elements)
        return frozenset(result)
    if isinstance(expr, Binary) and expr.op in ("union", "inter", "\\"):
        a, b = references(expr.left, env), references(expr.right, env)
        return {"union": a | b, "inter": a & b, "\\": a - b}[expr.op]
    if isinstance(expr, Name) and expr.name == "frame":
        return frozenset(env.locals.get("frame", frozenset()))
    if isinstance(expr, (Field, Index)):
        return frozenset({reference(expr, env)})
    raise RuntimeFault(FaultKind.TYPE_ERROR, "frame must be a set of object parameters")


# ════════════════════════════════════════════════════════
# ENTRY POINTS
# ════════════════════════════════════════════════════════

def eval_expr(expr: Expr, valuation: Mapping[str, Any], consts: Mapping[str, Any],
              locals_: Optional[Dict[str, Any]] = None, spec: Optional[Specification] = None,
              on_unknown: Optional[Callable[[str], Any]] = None) -> Any:
    """Value of expr under a valuation, constants and locals (pure)"""
    return evaluate(expr, Env(valuation, consts, locals_, spec, on_unknown))


def constant_values(spec: Specification, overrides: Optional[Mapping[str, Any]] = None,
                    strict: bool = True) -> Dict[str, Any]:
    """
    Values of the global constants in declaration order.

    Args:
        spec: Specification
        overrides: Plain JSON values replacing declared values (experiment settings)
        strict: Raise on an evaluation fault instead of leaving the constant unbound
    """
    overrides = overrides or {}
    values: Dict[str, Any] = {}
    for entry in spec.constants.entries:
        try:
            if entry.name in overrides:
                values[entry.name] = value_from_json(overrides[entry.name], entry.type, spec)
            elif entry.value is not None:
                values[entry.name] = eval_expr(entry.value, {}, values, spec=spec)
        except (RuntimeFault, ValueError, KeyError, TypeError) as e:
            if strict:
                raise RuntimeFault(FaultKind.TYPE_ERROR, f"constant '{entry.name}': {e}", entry.name)
            logger.debug(f"constant '{entry.name}' left unbound: {e}")
    unknown = set(overrides) - {e.name for e in spec.constants.entries}
    if unknown and strict:
        raise RuntimeFault(FaultKind.UNBOUND_SYMBOL, f"unknown constant(s): {', '.join(sorted(unknown))}")
    return values


def check_constraints(spec: Specification, consts: Mapping[str, Any]) -> list:
    """Rendered constraint conjuncts that evaluate to false"""
    from language.render import render_expr
    violated = []
    for constraint in spec.constants.constraints:
        try:
            if eval_expr(constraint, {}, consts, spec=spec) is False:
                violated.append(render_expr(constraint))
        except RuntimeFault as fault:
            violated.append(f"{render_expr(constraint)} ({fault.kind.value})")
    return violated


def size_evaluator(consts: Mapping[str, Any], spec: Specification) -> Callable[[Expr], int]:
    """Callable evaluating array size expressions against constants"""
    return lambda size: _int(eval_expr(size, {}, consts, spec=spec))
