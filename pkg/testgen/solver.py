"""
Guard Solver
Layered constraint solver turning transition guards into concrete valuations

Layers:
1. Equality and membership propagation over top-level conjuncts
2. Interval tightening from bound comparisons
3. Ordered enumeration with early pruning (declaration order, value order)

Every witness is re-checked with the evaluator before it is returned.
"""
import math
from collections import ChainMap
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from config import DEFAULT_SOLVER_EFFORT, INT_DOMAIN, REAL_DOMAIN, SYMBOL_EOT, SYMBOL_TIME
from engine.evaluator import RuntimeFault, eval_expr, values_equal
from models.specification import (
    Binary, Expr, Literal, Name, Param, Specification, TypeExpr, Unary, children, free_names,
)
from models.values import EnumLit, sorted_values
from utils.logger import setup_logger

logger = setup_logger(__name__)

MIDPOINT_SPLITS = 16


class UnsupportedTerm(Exception):
    """A guard term outside the solver's theory"""

    def __init__(self, term: str, reason: str = "unsupported term"):
        super().__init__(f"{reason}: {term}")
        self.term = term
        self.reason = reason


class SolverEffortExceeded(Exception):
    """Candidate budget exhausted before a witness or a refutation"""


class _Unsat:
    """Result marker of an unsatisfiable guard"""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self):
        return False

    def __repr__(self):
        return "UNSAT"


UNSAT = _Unsat()


# ════════════════════════════════════════════════════════
# DOMAINS
# ════════════════════════════════════════════════════════

@dataclass
class Domain:
    """Search domain of one symbol"""
    kind: str                                  # bool, int, nat, real, enum, string, value
    lo: Optional[float] = None
    hi: Optional[float] = None
    lo_strict: bool = False
    hi_strict: bool = False
    values: Optional[Tuple[Any, ...]] = None   # finite candidate list

    def copy(self) -> "Domain":
        return Domain(self.kind, self.lo, self.hi, self.lo_strict, self.hi_strict, self.values)

    def admits(self, value: Any) -> bool:
        if value is None:
            return False
        if self.kind == "bool":
            ok = isinstance(value, bool)
        elif self.kind in ("int", "nat"):
            ok = (isinstance(value, int) and not isinstance(value, bool)) or (
                isinstance(value, float) and value.is_integer())
            ok = ok and (self.kind == "int" or value >= 0)
        elif self.kind == "real":
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        elif self.kind == "enum":
            ok = isinstance(value, EnumLit)
        elif self.kind == "string":
            ok = isinstance(value, str)
        else:
            ok = True
        if ok and self.values is not None:
            ok = any(values_equal(value, v) for v in self.values)
        return ok

    def normalize(self, value: Any) -> Any:
        if self.kind in ("int", "nat") and isinstance(value, float):
            return int(value)
        if self.kind == "real" and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        return value

    def tighten(self, op: str, bound: float):
        """Intersect with `symbol op bound`"""
        if op in (">", ">="):
            strict = op == ">"
            if self.lo is None or bound > self.lo or (bound == self.lo and strict):
                self.lo, self.lo_strict = bound, strict
        elif op in ("<", "<="):
            strict = op == "<"
            if self.hi is None or bound < self.hi or (bound == self.hi and strict):
                self.hi, self.hi_strict = bound, strict

    def candidates(self) -> Iterator[Any]:
        """Values in ascending value order"""
        if self.values is not None:
            for v in self.values:
                if self._in_bounds(v):
                    yield v
            return
        if self.kind in ("int", "nat"):
            lo = math.ceil(self.lo) if self.lo is not None else INT_DOMAIN[0]
            hi = math.floor(self.hi) if self.hi is not None else INT_DOMAIN[1]
            if self.kind == "nat":
                lo = max(lo, 0)
            for v in range(lo, hi + 1):
                if self._in_bounds(v):
                    yield v
        elif self.kind == "real":
            yield from self._real_candidates()
        elif self.kind == "string":
            yield ""

    def _real_candidates(self) -> Iterator[float]:
        lo = self.lo if self.lo is not None else REAL_DOMAIN[0]
        hi = self.hi if self.hi is not None else REAL_DOMAIN[1]
        found = False
        for v in range(math.ceil(lo), math.floor(hi) + 1):
            if self._in_bounds(v):
                found = True
                yield float(v)
        if found or lo > hi:
            return
        # no integer inside: split the interval towards its lower end
        width = hi - lo
        for k in range(1, MIDPOINT_SPLITS + 1):
            v = lo + width / (2 ** k)
            if self._in_bounds(v):
                yield v

    def _in_bounds(self, v: Any) -> bool:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            return True
        if self.lo is not None and (v < self.lo or (self.lo_strict and v == self.lo)):
            return False
        if self.hi is not None and (v > self.hi or (self.hi_strict and v == self.hi)):
            return False
        return True


def domain_for(t: TypeExpr, spec: Specification) -> Domain:
    """Default search domain of a declared type"""
    t = spec.resolve_type(t)
    if t.kind == "bool":
        return Domain("bool", values=(False, True))
    if t.kind == "int":
        return Domain("int")
    if t.kind == "nat":
        return Domain("nat", lo=0)
    if t.kind == "real":
        return Domain("real")
    if t.kind == "string":
        return Domain("string")
    if t.kind == "enum":
        decl = spec.enum(t.name)
        return Domain("enum", values=tuple(EnumLit(decl.name, lit, i) for i, lit in enumerate(decl.literals)))
    return Domain("value")


def domains_for(params: Iterable[Param], spec: Specification) -> Dict[str, Domain]:
    """Domains of parameters in declaration order"""
    return {p.name: domain_for(p.type, spec) for p in params}


# ════════════════════════════════════════════════════════
# SOLVING
# ════════════════════════════════════════════════════════

def conjuncts(expr: Expr) -> List[Expr]:
    if isinstance(expr, Binary) and expr.op == "&&":
        return conjuncts(expr.left) + conjuncts(expr.right)
    return [expr]


def check_supported(expr: Expr, known: Iterable[str], spec: Specification):
    """Raise UnsupportedTerm for temporal operators and unknown symbols"""
    from language.render import render_expr

    def walk(e: Expr):
        if isinstance(e, Unary) and e.op in ("G", "F", "X"):
            raise UnsupportedTerm(render_expr(e), "temporal operator in a guard")
        if isinstance(e, Binary) and e.op == "U":
            raise UnsupportedTerm(render_expr(e), "temporal operator in a guard")
        for child in children(e):
            walk(child)

    walk(expr)
    known = set(known) | {SYMBOL_EOT, SYMBOL_TIME}
    for name in sorted(free_names(expr)):
        if name not in known and spec.enum_of_literal(name) is None:
            raise UnsupportedTerm(name, "unknown symbol")


class GuardSolver:
    """
    Finds the least witness of a guard.

    Args:
        domains: Symbol -> Domain in declaration order
        consts: Global constant values
        spec: Specification (enum literals, functions)
        fixed: Known values of other symbols (auxiliary variables)
        effort: Maximum number of candidate evaluations
        base: Valuation under the searched symbols (the tentative next state
            when the stepper synthesizes simulation outputs)
    """

    def __init__(self, domains: Mapping[str, Domain], consts: Optional[Mapping[str, Any]] = None,
                 spec: Optional[Specification] = None, fixed: Optional[Mapping[str, Any]] = None,
                 effort: int = DEFAULT_SOLVER_EFFORT, base: Optional[Mapping[str, Any]] = None):
        self.domains = dict(domains)
        self.base = base if base is not None else {}
        self.consts = dict(consts or {})
        self.spec = spec or Specification()
        self.fixed = dict(fixed or {})
        self.effort = effort
        self.evaluations = 0

    def _holds(self, expr: Expr, assignment: Mapping[str, Any]) -> bool:
        self.evaluations += 1
        if self.evaluations > self.effort:
            raise SolverEffortExceeded(f"solver effort {self.effort} exhausted")
        try:
            return eval_expr(expr, ChainMap(assignment, self.base), self.consts, self.fixed, self.spec) is True
        except RuntimeFault:
            return False

    def _value(self, expr: Expr, assignment: Mapping[str, Any]) -> Any:
        return eval_expr(expr, ChainMap(assignment, self.base), self.consts, self.fixed, self.spec)

    def solve(self, guard: Expr):
        """Least satisfying assignment of the guard's symbols, or UNSAT"""
        check_supported(guard, set(self.domains) | set(self.consts) | set(self.fixed) | set(self.base), self.spec)
        parts = conjuncts(guard)
        symbols = [s for s in self.domains if s in free_names(guard) and s not in self.fixed]
        domains = {s: self.domains[s].copy() for s in symbols}
        assignment: Dict[str, Any] = {}

        if not self._propagate(parts, symbols, domains, assignment):
            return UNSAT
        for s in symbols:
            if s not in assignment and domains[s].kind == "value":
                raise UnsupportedTerm(s, "no search domain for symbol")

        open_symbols = [s for s in symbols if s not in assignment]
        position = {s: i for i, s in enumerate(open_symbols)}
        ready: Dict[int, List[Expr]] = {}
        for part in parts:
            needed = [position[s] for s in free_names(part) if s in position]
            ready.setdefault(max(needed) if needed else -1, []).append(part)

        if not all(self._holds(p, assignment) for p in ready.get(-1, [])):
            return UNSAT
        witness = self._search(open_symbols, domains, assignment, ready, 0)
        if witness is None:
            return UNSAT
        if not self._holds(guard, witness):
            return UNSAT
        return {s: witness[s] for s in symbols}

    def _propagate(self, parts: Sequence[Expr], symbols: Sequence[str],
                   domains: Dict[str, Domain], assignment: Dict[str, Any]) -> bool:
        """Equalities, memberships and bounds; False when a conjunct is refuted"""
        changed = True
        while changed:
            changed = False
            for part in parts:
                if not isinstance(part, Binary):
                    continue
                for sym, other, op in _symbol_sides(part):
                    if sym not in domains or sym in assignment:
                        continue
                    if free_names(other) & (set(symbols) - set(assignment)):
                        continue
                    try:
                        value = self._value(other, assignment)
                    except RuntimeFault:
                        return False
                    domain = domains[sym]
                    if op == "=":
                        if not domain.admits(value) or not domain._in_bounds(value):
                            return False
                        assignment[sym] = domain.normalize(value)
                        changed = True
                    elif op == "in":
                        allowed = tuple(v for v in sorted_values(value or ()) if domain.admits(v))
                        if domain.values is not None:
                            allowed = tuple(v for v in allowed if any(values_equal(v, w) for w in domain.values))
                        if not allowed:
                            return False
                        if domain.values != allowed:
                            domain.values = allowed
                            changed = True
                    elif op in ("<", "<=", ">", ">=") and domain.kind in ("int", "nat", "real"):
                        if isinstance(value, (int, float)) and not isinstance(value, bool):
                            before = (domain.lo, domain.lo_strict, domain.hi, domain.hi_strict)
                            domain.tighten(op, value)
                            changed |= before != (domain.lo, domain.lo_strict, domain.hi, domain.hi_strict)
        return True

    def _search(self, symbols: Sequence[str], domains: Mapping[str, Domain], assignment: Dict[str, Any],
                ready: Mapping[int, List[Expr]], k: int) -> Optional[Dict[str, Any]]:
        if k == len(symbols):
            return dict(assignment)
        sym = symbols[k]
        for value in domains[sym].candidates():
            assignment[sym] = value
            if all(self._holds(p, assignment) for p in ready.get(k, [])):
                found = self._search(symbols, domains, assignment, ready, k + 1)
                if found is not None:
                    return found
        assignment.pop(sym, None)
        return None


_FLIPPED = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "="}


def _symbol_sides(part: Binary) -> List[Tuple[str, Expr, str]]:
    """(symbol, other side, op as seen from the symbol) for comparisons with a bare symbol"""
    sides = []
    if part.op == "in" and isinstance(part.left, Name):
        sides.append((part.left.name, part.right, "in"))
    elif part.op in _FLIPPED:
        if isinstance(part.left, Name):
            sides.append((part.left.name, part.right, part.op))
        if isinstance(part.right, Name):
            sides.append((part.right.name, part.left, _FLIPPED[part.op]))
    return sides


def solve_guard(guard: Expr, domains: Mapping[str, Domain], consts: Optional[Mapping[str, Any]] = None,
                spec: Optional[Specification] = None, fixed: Optional[Mapping[str, Any]] = None,
                effort: int = DEFAULT_SOLVER_EFFORT, base: Optional[Mapping[str, Any]] = None):
    """Concrete valuation of the guard's symbols, or UNSAT"""
    return GuardSolver(domains, consts, spec, fixed, effort, base).solve(guard)


def satisfiability_check(domains: Mapping[str, Domain], consts: Optional[Mapping[str, Any]] = None,
                         spec: Optional[Specification] = None, effort: int = DEFAULT_SOLVER_EFFORT):
    """Callable for automaton construction; unsupported terms count as satisfiable"""
    def satisfiable(expr: Expr) -> bool:
        try:
            return solve_guard(expr, domains, consts, spec, effort=effort) is not UNSAT
        except (UnsupportedTerm, SolverEffortExceeded) as e:
            logger.debug(f"treating guard as satisfiable: {e}")
            return True

    return satisfiable


def literal_true(expr: Expr) -> bool:
    return isinstance(expr, Literal) and expr.value is True
