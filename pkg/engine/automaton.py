"""
Symbolic Automaton
Finite-trace automaton construction for scenario formulas by progression

States are canonical progression residuals. Transitions come from a Shannon
expansion over the present-position propositions; guards are minimised with
Quine-McCluskey (unsatisfiable minterms used as don't-cares), un-abstracted
and conjoined with the instance constraint.
"""
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from config import EXACT_GUARD_ATOMS
from engine.ltlf import (
    assign_atoms, end_value, formula_text, formula_to_expr, present_atoms, progress, to_formula,
)
from models.formula import (
    FALSE, TRUE, And, Atom, Finally, Globally, Iff, Implies, LtlFormula, Next, Not, Or, Until,
    Window, is_false, is_true,
)
from models.specification import (
    Binary, Expr, Literal, Name, ScenarioTypeDecl, Specification, conjoin,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)

PROP_PREFIX = "p_"


# ════════════════════════════════════════════════════════
# PHI_SCSL AND ABSTRACTION
# ════════════════════════════════════════════════════════

def build_phi_scsl(scenario: ScenarioTypeDecl, consts: Optional[Mapping] = None,
                   spec: Optional[Specification] = None) -> LtlFormula:
    """precondition && X(spec_1 && ... && spec_n), or the conjunction alone without a precondition"""
    parts = [to_formula(e, consts, spec) for e in scenario.specs]
    if not parts:
        body = TRUE
    elif len(parts) == 1:
        body = parts[0]
    else:
        body = And(tuple(parts))
    if scenario.precondition is None:
        return body
    return And((to_formula(scenario.precondition, consts, spec), Next(body)))


@dataclass(frozen=True)
class AbstractionMap:
    """Bijection between atom expressions and proposition names p_0, p_1, ..."""
    entries: Tuple[Tuple[str, Expr], ...] = ()

    def expr_of(self, name: str) -> Optional[Expr]:
        return next((e for n, e in self.entries if n == name), None)

    def index_of(self, name: str) -> int:
        return int(name[len(PROP_PREFIX):])

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> Dict[str, str]:
        from language.render import render_expr
        return {n: render_expr(e) for n, e in self.entries}


def _map_atoms(f: LtlFormula, fn: Callable[[Atom], LtlFormula]) -> LtlFormula:
    if isinstance(f, Atom):
        if is_true(f) or is_false(f):
            return f
        return fn(f)
    if isinstance(f, (Not, Next, Finally, Globally)):
        return type(f)(_map_atoms(f.arg, fn))
    if isinstance(f, Window):
        return Window(_map_atoms(f.arg, fn), f.remaining)
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_map_atoms(a, fn) for a in f.args))
    if isinstance(f, (Implies, Iff, Until)):
        return type(f)(_map_atoms(f.left, fn), _map_atoms(f.right, fn))
    raise TypeError(f"not a formula: {f!r}")


def abstract(phi: LtlFormula) -> Tuple[LtlFormula, AbstractionMap]:
    """Replace atoms by propositions in first-occurrence order"""
    entries: List[Tuple[str, Expr]] = []

    def replace_atom(atom: Atom) -> LtlFormula:
        for name, expr in entries:
            if expr == atom.expr:
                return Atom(Name(name))
        name = f"{PROP_PREFIX}{len(entries)}"
        entries.append((name, atom.expr))
        return Atom(Name(name))

    abstracted = _map_atoms(phi, replace_atom)
    return abstracted, AbstractionMap(tuple(entries))


def unabstract(phi: LtlFormula, amap: AbstractionMap) -> LtlFormula:
    def restore(atom: Atom) -> LtlFormula:
        if isinstance(atom.expr, Name):
            expr = amap.expr_of(atom.expr.name)
            if expr is not None:
                return Atom(expr)
        return atom

    return _map_atoms(phi, restore)


# ════════════════════════════════════════════════════════
# GUARD MINIMISATION
# ════════════════════════════════════════════════════════

Cube = Tuple[Optional[bool], ...]


def _cube_minterms(cube: Cube) -> List[int]:
    n = len(cube)
    free = [i for i, v in enumerate(cube) if v is None]
    base = sum(1 << (n - 1 - i) for i, v in enumerate(cube) if v)
    result = []
    for bits in itertools.product((0, 1), repeat=len(free)):
        m = base
        for i, b in zip(free, bits):
            if b:
                m |= 1 << (n - 1 - i)
        result.append(m)
    return result


def _minterm_cube(m: int, n: int) -> Cube:
    return tuple(bool(m >> (n - 1 - i) & 1) for i in range(n))


def quine_mccluskey(n: int, on: Set[int], dc: Set[int]) -> List[Cube]:
    """Minimal-ish sum of products covering `on`, free to cover `dc`"""
    if not on:
        return []
    groups = {(_minterm_cube(m, n), frozenset({m})) for m in on | dc}
    primes: Set[Tuple[Cube, frozenset]] = set()
    while groups:
        merged = set()
        used = set()
        items = sorted(groups, key=lambda g: (sorted(g[1]), str(g[0])))
        for (a, ma), (b, mb) in itertools.combinations(items, 2):
            diff = [i for i in range(n) if a[i] != b[i]]
            if len(diff) == 1 and a[diff[0]] is not None and b[diff[0]] is not None:
                cube = tuple(None if i == diff[0] else a[i] for i in range(n))
                merged.add((cube, ma | mb))
                used.add((a, ma))
                used.add((b, mb))
        primes |= groups - used
        groups = merged

    prime_list = sorted({cube: ms for cube, ms in primes}.items(), key=lambda p: str(p[0]))
    remaining = set(on)
    cover: List[Cube] = []
    for m in sorted(on):
        covering = [p for p in prime_list if m in p[1]]
        if len(covering) == 1 and covering[0][0] not in cover:
            cover.append(covering[0][0])
            remaining -= covering[0][1]
    while remaining:
        best = max(prime_list, key=lambda p: (len(p[1] & remaining), -sum(v is not None for v in p[0])))
        cover.append(best[0])
        remaining -= best[1]
    return sorted(cover, key=lambda c: tuple(2 if v is None else int(not v) for v in c))


def cube_formula(cube: Cube, props: Sequence[Atom]) -> LtlFormula:
    literals = []
    for atom, value in zip(props, cube):
        if value is None:
            continue
        literals.append(atom if value else Not(atom))
    if not literals:
        return TRUE
    if len(literals) == 1:
        return literals[0]
    return And(tuple(literals))


def cover_formula(cubes: Sequence[Cube], props: Sequence[Atom]) -> LtlFormula:
    terms = [cube_formula(c, props) for c in cubes]
    if not terms:
        return FALSE
    if len(terms) == 1:
        return terms[0]
    return Or(tuple(terms))


# ════════════════════════════════════════════════════════
# AUTOMATON
# ════════════════════════════════════════════════════════

@dataclass
class State:
    name: str
    formula: LtlFormula
    accepting: bool


@dataclass
class Transition:
    src: str
    dst: str
    guard: Expr                     # un-abstracted, instance constraint included
    abstract_guard: LtlFormula      # over propositions


@dataclass
class SymbolicAutomaton:
    """
    Finite-trace automaton with quantifier-free guards.

    A trace is accepted when, after consuming it, some current state is
    accepting.
    """
    states: List[State]
    initial: str
    transitions: List[Transition]
    abstraction: AbstractionMap
    instance_constraint: Optional[Expr] = None
    cycle: int = 1
    name: str = ""
    _by_name: Dict[str, State] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_name = {s.name: s for s in self.states}

    def state(self, name: str) -> State:
        return self._by_name[name]

    @property
    def accepting(self) -> Set[str]:
        return {s.name for s in self.states if s.accepting}

    def outgoing(self, name: str) -> List[Transition]:
        return [t for t in self.transitions if t.src == name]

    def to_dict(self) -> Dict[str, Any]:
        from language.render import render_expr
        return {
            'name': self.name,
            'cycle': self.cycle,
            'initial': self.initial,
            'accepting': sorted(self.accepting),
            'propositions': self.abstraction.to_dict(),
            'instance_constraint': render_expr(self.instance_constraint) if self.instance_constraint is not None else None,
            'states': [{'name': s.name, 'formula': formula_text(s.formula), 'accepting': s.accepting}
                       for s in self.states],
            'transitions': [{'src': t.src, 'dst': t.dst, 'guard': render_expr(t.guard),
                             'abstract_guard': formula_text(t.abstract_guard)}
                            for t in self.transitions],
        }


def _is_accepting(f: LtlFormula) -> bool:
    try:
        return end_value(f)
    except ValueError:
        # unprogressed initial formula: the empty trace is never accepted
        return False


def build_automaton(phi_abs: LtlFormula, amap: AbstractionMap,
                    instance_constraint: Optional[Expr] = None, c: int = 1,
                    satisfiable: Optional[Callable[[Expr], bool]] = None,
                    name: str = "", max_states: int = 5000) -> SymbolicAutomaton:
    """
    Build the automaton of an abstracted formula.

    Args:
        phi_abs: Formula over propositions p_0, p_1, ...
        amap: Abstraction map from abstract()
        instance_constraint: Conjunction of parameter bindings added to every guard
        c: Cycle bound of the widened Next
        satisfiable: Checks an un-abstracted conjunction; unsatisfiable minterms
            become don't-cares of the guard minimisation
        name: Automaton name used in dumps
        max_states: Construction bound
    """
    keys: Dict[str, str] = {}
    states: List[State] = []
    transitions: List[Transition] = []
    pending: List[LtlFormula] = []

    def state_for(f: LtlFormula) -> str:
        key = formula_text(f)
        if key not in keys:
            if len(states) >= max_states:
                raise RuntimeError(f"automaton {name} exceeds {max_states} states")
            if is_true(f):
                state_name = "accept"
            else:
                state_name = f"s{sum(1 for s in states if s.name != 'accept')}"
            keys[key] = state_name
            states.append(State(state_name, f, _is_accepting(f)))
            pending.append(f)
        return keys[key]

    def sat(cube: Cube, props: Sequence[Atom]) -> bool:
        if satisfiable is None:
            return True
        expr = formula_to_expr(unabstract(cube_formula(cube, props), amap))
        if instance_constraint is not None:
            expr = Binary("&&", expr, instance_constraint)
        try:
            return satisfiable(expr)
        except Exception as e:
            logger.debug(f"satisfiability check failed, assuming satisfiable: {e}")
            return True

    initial = state_for(phi_abs)
    while pending:
        f = pending.pop(0)
        src = keys[formula_text(f)]
        expanded = progress(f, c)
        props = sorted(present_atoms(expanded), key=lambda a: amap.index_of(a.expr.name))
        leaves = _shannon(expanded, props)

        targets: Dict[str, List[Cube]] = {}
        target_formulas: Dict[str, LtlFormula] = {}
        for cube, residual in leaves:
            key = formula_text(residual)
            targets.setdefault(key, []).append(cube)
            target_formulas[key] = residual

        n = len(props)
        unsat: Set[int] = set()
        if satisfiable is not None and 0 < n <= EXACT_GUARD_ATOMS:
            unsat = {m for m in range(1 << n) if not sat(_minterm_cube(m, n), props)}

        for key, cubes in targets.items():
            residual = target_formulas[key]
            if n <= EXACT_GUARD_ATOMS:
                on = set()
                for cube in cubes:
                    on.update(_cube_minterms(cube))
                if on and on <= unsat:
                    guard_abs = cover_formula(cubes, props)
                else:
                    guard_abs = cover_formula(quine_mccluskey(n, on - unsat, unsat), props)
            else:
                guard_abs = cover_formula(cubes, props)
            dst = state_for(residual)
            guard = _guard_expr(guard_abs, amap, instance_constraint)
            transitions.append(Transition(src, dst, guard, guard_abs))

    logger.debug(f"automaton {name}: {len(states)} states, {len(transitions)} transitions")
    return SymbolicAutomaton(states, initial, transitions, amap, instance_constraint, c, name)


def _shannon(f: LtlFormula, props: Sequence[Atom]) -> List[Tuple[Cube, LtlFormula]]:
    """Leaves (partial assignment, residual) with non-false residuals"""
    n = len(props)
    index = {p: i for i, p in enumerate(props)}
    leaves: List[Tuple[Cube, LtlFormula]] = []

    def expand(g: LtlFormula, cube: List[Optional[bool]]):
        if is_false(g):
            return
        remaining = [a for a in present_atoms(g) if a in index]
        if not remaining:
            leaves.append((tuple(cube), g))
            return
        atom = min(remaining, key=lambda a: index[a])
        for value in (True, False):
            cube[index[atom]] = value
            expand(assign_atoms(g, lambda a, at=atom, v=value: v if a == at else None), cube)
            cube[index[atom]] = None

    expand(f, [None] * n)
    return leaves


def _guard_expr(guard_abs: LtlFormula, amap: AbstractionMap, constraint: Optional[Expr]) -> Expr:
    if is_true(guard_abs):
        return constraint if constraint is not None else Literal(True)
    expr = formula_to_expr(unabstract(guard_abs, amap))
    return Binary("&&", expr, constraint) if constraint is not None else expr


def instance_constraint(bindings: Iterable[Tuple[str, Expr]]) -> Optional[Expr]:
    """Conjunction of name = value for the bound scenario parameters"""
    parts = [Binary("=", Name(name), value) for name, value in bindings]
    return conjoin(parts) if parts else None


def build_for_scenario(scenario: ScenarioTypeDecl, bindings: Iterable[Tuple[str, Expr]] = (),
                       consts: Optional[Mapping] = None, spec: Optional[Specification] = None,
                       c: int = 1, satisfiable: Optional[Callable[[Expr], bool]] = None,
                       name: str = "") -> SymbolicAutomaton:
    """buildPhiScsl, abstract and buildAutomaton in one call"""
    phi = build_phi_scsl(scenario, consts, spec)
    phi_abs, amap = abstract(phi)
    return build_automaton(phi_abs, amap, instance_constraint(bindings), c, satisfiable,
                           name or scenario.name)


# ════════════════════════════════════════════════════════
# RUNNING
# ════════════════════════════════════════════════════════

def step_state_set(aut: SymbolicAutomaton, states: Iterable[str], valuation: Any,
                   holds: Callable[[Expr, Any], bool]) -> Set[str]:
    """Successors of all states whose guard holds under the valuation"""
    result: Set[str] = set()
    for name in states:
        for t in aut.outgoing(name):
            if holds(t.guard, valuation):
                result.add(t.dst)
    return result


def accepts(aut: SymbolicAutomaton, trace: Sequence, holds: Callable[[Expr, Any], bool]) -> bool:
    """Finite-trace acceptance of a non-empty trace"""
    if not trace:
        return False
    current = {aut.initial}
    for valuation in trace:
        current = step_state_set(aut, current, valuation, holds)
        if not current:
            return False
    return bool(current & aut.accepting)
