"""
Finite-Trace LTL
Reference evaluator, formula progression and the online monitor

Next is widened by the cycle bound c: X phi holds at position i when phi holds
at one of the positions i+1 .. min(last, i+2c-1). With c = 1 this is the
standard finite-trace Next. Positions are 0-based.
"""
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from models.enums import Verdict
from engine.evaluator import RuntimeFault
from models.formula import (
    FALSE, TRUE, And, Atom, Finally, Globally, Iff, Implies, LtlFormula, Next, Not, Or, Until,
    Window, is_false, is_true,
)
from models.specification import (
    Binary, Expr, Forall, Literal, ScenarioTypeDecl, Specification, Unary,
    free_names, is_temporal, substitute,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)

Holds = Callable[[Expr, object], bool]


# ════════════════════════════════════════════════════════
# CONVERSION
# ════════════════════════════════════════════════════════

def to_formula(expr: Expr, consts: Optional[Mapping] = None, spec: Optional[Specification] = None) -> LtlFormula:
    """
    Convert a spec expression into a formula.

    Maximal temporal-free sub-expressions become atoms; a forall around a
    temporal body is expanded over its (constant) range.
    """
    if not is_temporal(expr):
        if isinstance(expr, Literal) and isinstance(expr.value, bool):
            return TRUE if expr.value else FALSE
        return Atom(expr)
    if isinstance(expr, Unary):
        arg = to_formula(expr.operand, consts, spec)
        return {"!": Not, "G": Globally, "F": Finally, "X": Next}[expr.op](arg)
    if isinstance(expr, Binary):
        left = to_formula(expr.left, consts, spec)
        right = to_formula(expr.right, consts, spec)
        if expr.op == "&&":
            return And(_flatten(And, (left, right)))
        if expr.op == "||":
            return Or(_flatten(Or, (left, right)))
        if expr.op == "=>":
            return Implies(left, right)
        if expr.op == "<=>":
            return Iff(left, right)
        if expr.op == "U":
            return Until(left, right)
    if isinstance(expr, Forall):
        from engine.evaluator import eval_expr
        lo = eval_expr(expr.lo, {}, consts or {}, spec=spec)
        hi = eval_expr(expr.hi, {}, consts or {}, spec=spec)
        parts = [to_formula(substitute(expr.body, {expr.var: Literal(i)}), consts, spec)
                 for i in range(int(lo), int(hi) + 1)]
        if len(parts) > 1:
            return And(_flatten(And, parts))
        return parts[0] if parts else TRUE
    raise ValueError(f"temporal operator below a non-boolean operator in {type(expr).__name__}")


def _flatten(kind, parts) -> tuple:
    """Source-ordered operands of nested conjunctions (or disjunctions)"""
    flat = []
    for part in parts:
        flat.extend(part.args if isinstance(part, kind) else (part,))
    return tuple(flat)


def cycle_bound(expr: Expr, scenario: Optional[ScenarioTypeDecl], spec: Specification) -> int:
    """Largest cycletime among the objects a formula reads (1 when none)"""
    if scenario is None:
        return 1
    bound = 1
    names = free_names(expr)
    for param in scenario.params:
        if param.name not in names:
            continue
        t = spec.resolve_type(param.type)
        while t.kind == "array" and t.elem is not None:
            t = spec.resolve_type(t.elem)
        if t.kind == "object":
            bound = max(bound, spec.object_type(t.name).cycletime)
    return bound


def formula_text(f: LtlFormula) -> str:
    """Readable rendering used for canonical ordering and dumps"""
    from language.render import render_expr
    if isinstance(f, Atom):
        return render_expr(f.expr)
    if isinstance(f, Not):
        return f"!{formula_text(f.arg)}"
    if isinstance(f, And):
        return "(" + " && ".join(formula_text(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(" + " || ".join(formula_text(a) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"({formula_text(f.left)} => {formula_text(f.right)})"
    if isinstance(f, Iff):
        return f"({formula_text(f.left)} <=> {formula_text(f.right)})"
    if isinstance(f, Until):
        return f"({formula_text(f.left)} U {formula_text(f.right)})"
    if isinstance(f, Next):
        return f"X {formula_text(f.arg)}"
    if isinstance(f, Finally):
        return f"F {formula_text(f.arg)}"
    if isinstance(f, Globally):
        return f"G {formula_text(f.arg)}"
    if isinstance(f, Window):
        return f"X[{f.remaining}] {formula_text(f.arg)}"
    raise TypeError(f"not a formula: {f!r}")


def formula_to_expr(f: LtlFormula) -> Expr:
    """Expression form of a temporal-free formula"""
    if isinstance(f, Atom):
        return f.expr
    if isinstance(f, Not):
        return Unary("!", formula_to_expr(f.arg))
    if isinstance(f, (And, Or)):
        op = "&&" if isinstance(f, And) else "||"
        parts = [formula_to_expr(a) for a in f.args]
        result = parts[0]
        for part in parts[1:]:
            result = Binary(op, result, part)
        return result
    if isinstance(f, Implies):
        return Binary("=>", formula_to_expr(f.left), formula_to_expr(f.right))
    if isinstance(f, Iff):
        return Binary("<=>", formula_to_expr(f.left), formula_to_expr(f.right))
    raise ValueError(f"temporal formula has no expression form: {formula_text(f)}")


# ════════════════════════════════════════════════════════
# SIMPLIFICATION
# ════════════════════════════════════════════════════════

def negate(f: LtlFormula) -> LtlFormula:
    if is_true(f):
        return FALSE
    if is_false(f):
        return TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def make_and(parts: Iterable[LtlFormula]) -> LtlFormula:
    flat: Dict[str, LtlFormula] = {}
    for part in parts:
        for sub in (part.args if isinstance(part, And) else (part,)):
            if is_false(sub):
                return FALSE
            if is_true(sub):
                continue
            flat[formula_text(sub)] = sub
    for sub in flat.values():
        if formula_text(negate(sub)) in flat:
            return FALSE
    if not flat:
        return TRUE
    if len(flat) == 1:
        return next(iter(flat.values()))
    return And(tuple(flat[k] for k in sorted(flat)))


def make_or(parts: Iterable[LtlFormula]) -> LtlFormula:
    flat: Dict[str, LtlFormula] = {}
    for part in parts:
        for sub in (part.args if isinstance(part, Or) else (part,)):
            if is_true(sub):
                return TRUE
            if is_false(sub):
                continue
            flat[formula_text(sub)] = sub
    for sub in flat.values():
        if formula_text(negate(sub)) in flat:
            return TRUE
    if not flat:
        return FALSE
    if len(flat) == 1:
        return next(iter(flat.values()))
    return Or(tuple(flat[k] for k in sorted(flat)))


def make_window(arg: LtlFormula, remaining: int) -> LtlFormula:
    if remaining <= 0 or is_false(arg):
        return FALSE
    return Window(arg, remaining)


def assign_atoms(f: LtlFormula, value_of: Callable[[Atom], Optional[bool]]) -> LtlFormula:
    """
    Replace present-position atoms by truth values and simplify.

    Atoms below temporal operators refer to later positions and are left alone.
    value_of may return None to keep an atom symbolic.
    """
    if isinstance(f, Atom):
        if is_true(f) or is_false(f):
            return f
        value = value_of(f)
        if value is None:
            return f
        return TRUE if value else FALSE
    if isinstance(f, Not):
        return negate(assign_atoms(f.arg, value_of))
    if isinstance(f, And):
        return make_and(assign_atoms(a, value_of) for a in f.args)
    if isinstance(f, Or):
        return make_or(assign_atoms(a, value_of) for a in f.args)
    return f


# ════════════════════════════════════════════════════════
# REFERENCE EVALUATION
# ════════════════════════════════════════════════════════

def eval_finite(f: LtlFormula, trace: Sequence, i: int = 0, c: int = 1,
                holds: Optional[Holds] = None) -> bool:
    """
    Truth of f at position i of a finite trace (brute force).

    Args:
        f: Formula
        trace: Non-empty sequence of valuations
        i: 0-based position
        c: Cycle bound widening Next
        holds: Atom evaluator holds(expr, valuation); by default a valuation
            maps atoms to booleans
    """
    if not trace:
        raise ValueError("trace must be non-empty")
    if not 0 <= i < len(trace):
        raise IndexError(f"position {i} outside trace of length {len(trace)}")
    if c < 1:
        raise ValueError("cycle bound must be at least 1")
    holds = holds or (lambda expr, valuation: bool(valuation[expr]))
    last = len(trace) - 1
    cache: Dict[Tuple[int, int], bool] = {}

    def ev(g: LtlFormula, j: int) -> bool:
        key = (id(g), j)
        if key in cache:
            return cache[key]
        if isinstance(g, Atom):
            if is_true(g) or is_false(g):
                result = is_true(g)
            else:
                result = holds(g.expr, trace[j])
        elif isinstance(g, Not):
            result = not ev(g.arg, j)
        elif isinstance(g, And):
            result = all(ev(a, j) for a in g.args)
        elif isinstance(g, Or):
            result = any(ev(a, j) for a in g.args)
        elif isinstance(g, Implies):
            result = (not ev(g.left, j)) or ev(g.right, j)
        elif isinstance(g, Iff):
            result = ev(g.left, j) == ev(g.right, j)
        elif isinstance(g, Next):
            result = any(ev(g.arg, l) for l in range(j + 1, min(last, j + 2 * c - 1) + 1))
        elif isinstance(g, Window):
            result = any(ev(g.arg, l) for l in range(j, min(last, j + g.remaining - 1) + 1))
        elif isinstance(g, Until):
            result = False
            for k in range(j, last + 1):
                if ev(g.right, k):
                    result = True
                    break
                if not ev(g.left, k):
                    break
        elif isinstance(g, Finally):
            result = any(ev(g.arg, k) for k in range(j, last + 1))
        elif isinstance(g, Globally):
            result = all(ev(g.arg, k) for k in range(j, last + 1))
        else:
            raise TypeError(f"not a formula: {g!r}")
        cache[key] = result
        return result

    return ev(f, i)


# ════════════════════════════════════════════════════════
# PROGRESSION
# ════════════════════════════════════════════════════════

def progress(f: LtlFormula, c: int = 1) -> LtlFormula:
    """
    Symbolic progression through one position.

    The result is a boolean combination of present-position atoms and
    obligations for the next position. Assigning the atoms (assign_atoms)
    yields the residual formula.
    """
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return negate(progress(f.arg, c))
    if isinstance(f, And):
        return make_and(progress(a, c) for a in f.args)
    if isinstance(f, Or):
        return make_or(progress(a, c) for a in f.args)
    if isinstance(f, Implies):
        return make_or([negate(progress(f.left, c)), progress(f.right, c)])
    if isinstance(f, Iff):
        left, right = progress(f.left, c), progress(f.right, c)
        return make_or([make_and([left, right]), make_and([negate(left), negate(right)])])
    if isinstance(f, Next):
        return make_window(f.arg, 2 * c - 1)
    if isinstance(f, Window):
        return make_or([progress(f.arg, c), make_window(f.arg, f.remaining - 1)])
    if isinstance(f, Until):
        return make_or([progress(f.right, c), make_and([progress(f.left, c), f])])
    if isinstance(f, Finally):
        return make_or([progress(f.arg, c), f])
    if isinstance(f, Globally):
        return make_and([progress(f.arg, c), f])
    raise TypeError(f"not a formula: {f!r}")


def step_formula(f: LtlFormula, valuation, c: int, holds: Holds) -> LtlFormula:
    """
    Residual of f after consuming one valuation.

    An atom whose evaluation faults (e.g. a field of a deleted object) stays
    undecided; the fault is raised only when the residual still depends on it.
    """
    faults: Dict[str, RuntimeFault] = {}

    def value_of(atom: Atom) -> Optional[bool]:
        try:
            return bool(holds(atom.expr, valuation))
        except RuntimeFault as fault:
            faults.setdefault(formula_text(atom), fault)
            return None

    residual = assign_atoms(progress(f, c), value_of)
    if faults:
        for atom in present_atoms(residual):
            fault = faults.get(formula_text(atom))
            if fault is not None:
                raise fault
    return residual


def present_atoms(f: LtlFormula) -> List[Atom]:
    """Atoms at the present position (not below a temporal operator)"""
    found: List[Atom] = []

    def walk(g):
        if isinstance(g, Atom):
            if not (is_true(g) or is_false(g)) and g not in found:
                found.append(g)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a)
        elif isinstance(g, Not):
            walk(g.arg)
        elif isinstance(g, (Implies, Iff)):
            walk(g.left)
            walk(g.right)

    walk(f)
    return found


def end_value(f: LtlFormula) -> bool:
    """Truth of a residual obligation at the position after the last one"""
    if isinstance(f, Atom):
        if is_true(f) or is_false(f):
            return is_true(f)
        raise ValueError(f"unprogressed atom at end of trace: {formula_text(f)}")
    if isinstance(f, Not):
        return not end_value(f.arg)
    if isinstance(f, And):
        return all(end_value(a) for a in f.args)
    if isinstance(f, Or):
        return any(end_value(a) for a in f.args)
    if isinstance(f, Implies):
        return (not end_value(f.left)) or end_value(f.right)
    if isinstance(f, Iff):
        return end_value(f.left) == end_value(f.right)
    if isinstance(f, Globally):
        return True
    if isinstance(f, (Until, Finally, Window, Next)):
        return False
    raise TypeError(f"not a formula: {f!r}")


def verdict_of(f: LtlFormula) -> Verdict:
    if is_true(f):
        return Verdict.PASS
    if is_false(f):
        return Verdict.FAIL
    return Verdict.INCONCLUSIVE


def now_constraint(state: LtlFormula, c: int = 1, eager: bool = True) -> LtlFormula:
    """
    Present-position constraint implied by a residual obligation.

    Pending obligations are replaced by a truth value per polarity: with
    eager=True eventualities (F, U, widened X) count as unmet so that they are
    satisfied as early as possible; G counts as met. With eager=False every
    pending obligation counts as met, leaving the weakest constraint.
    """
    def close(g: LtlFormula, positive: bool) -> LtlFormula:
        if isinstance(g, Atom):
            return g
        if isinstance(g, Not):
            return negate(close(g.arg, not positive))
        if isinstance(g, And):
            return make_and(close(a, positive) for a in g.args)
        if isinstance(g, Or):
            return make_or(close(a, positive) for a in g.args)
        met = True if isinstance(g, Globally) or not eager else False
        return TRUE if met == positive else FALSE

    return close(progress(state, c), True)


# ════════════════════════════════════════════════════════
# MONITOR
# ════════════════════════════════════════════════════════

class Monitor:
    """
    Online three-valued monitor for one formula.

    Features:
    - PASS/FAIL are absorbing
    - finalize() agrees with eval_finite over the consumed segment
    """

    def __init__(self, formula: LtlFormula, cycle: int = 1, name: str = ""):
        if cycle < 1:
            raise ValueError("cycle bound must be at least 1")
        self.formula = formula
        self.cycle = cycle
        self.name = name
        self.state = formula
        self.consumed = 0

    @property
    def verdict(self) -> Verdict:
        return verdict_of(self.state) if self.consumed else Verdict.INCONCLUSIVE

    def step(self, valuation, holds: Holds) -> Verdict:
        if not (is_true(self.state) or is_false(self.state)):
            self.state = step_formula(self.state, valuation, self.cycle, holds)
        self.consumed += 1
        return verdict_of(self.state)

    def finalize(self) -> Verdict:
        """Final verdict of the consumed segment (PASS for an empty segment)"""
        if self.consumed == 0:
            return Verdict.PASS
        return Verdict.PASS if end_value(self.state) else Verdict.FAIL

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'formula': formula_text(self.formula),
            'state': formula_text(self.state),
            'cycle': self.cycle,
            'consumed': self.consumed,
        }


def run_monitor(f: LtlFormula, trace: Sequence, c: int = 1,
                holds: Optional[Holds] = None) -> Tuple[List[Verdict], Verdict]:
    """Verdicts after each valuation and the final verdict"""
    holds = holds or (lambda expr, valuation: bool(valuation[expr]))
    monitor = Monitor(f, c)
    verdicts = [monitor.step(valuation, holds) for valuation in trace]
    return verdicts, monitor.finalize()
