"""
Scenario Instances
Runtime of one scenario instance during a system test run

Features:
- Lifecycle directives: G(c => X !active), G(c => X active), G(c => X EoT)
- Online monitors over the behavioural specs of the active segment
- Guarded and change-triggered condition-actions with frame-checked writes
- Synthesis of framed parameter values for simulation instances
- Observer verdicts (PASS / FAIL with the violated formula)
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from config import DEFAULT_SOLVER_EFFORT, SYMBOL_ACTIVE, SYMBOL_EOT, SYMBOL_FRAME
from engine.actions import ActionSink, execute
from engine.collaboration import Mutation, parameter_type
from engine.evaluator import (
    Env, RuntimeFault, _bool, _int, eval_expr, evaluate, reference, references, values_equal,
)
from engine.ltlf import Monitor, cycle_bound, formula_text, formula_to_expr, make_and, now_constraint, to_formula
from models.enums import FaultKind, Lifecycle, Verdict
from models.formula import is_false, is_true
from models.specification import (
    Action, Assign, BOOLEAN_BINARY, Binary, Change, CollCreateInterface, CollCreateObject, CollDelete,
    Comprehension, Expr, Field, Forall, IfAction, Index, Literal, Name, ScenarioTypeDecl, SetLit,
    Specification, Unary, disjoin, free_names, is_temporal, map_children,
)
from models.values import CollabRef, ObjectRef, from_wire, to_wire
from testgen.scheduling import SchedNode
from testgen.solver import SolverEffortExceeded, UNSAT, UnsupportedTerm, domain_for, literal_true, solve_guard
from utils.logger import setup_logger

logger = setup_logger(__name__)

TERMINATE = "terminate"
KEEP_ALIVE = "keep_alive"
END_OF_TEST = "end_of_test"


# ════════════════════════════════════════════════════════
# STATIC SHAPE OF A SCENARIO
# ════════════════════════════════════════════════════════

@dataclass(frozen=True)
class Directive:
    """A lifecycle spec: when cond holds, the next tick is forced"""
    kind: str
    cond: Expr


def directive_of(expr: Expr) -> Optional[Directive]:
    """Directive kind of a spec written G(cond => X target), or None"""
    if not (isinstance(expr, Unary) and expr.op == "G"):
        return None
    body = expr.operand
    if not (isinstance(body, Binary) and body.op == "=>") or is_temporal(body.left):
        return None
    if not (isinstance(body.right, Unary) and body.right.op == "X"):
        return None
    target = body.right.operand
    if isinstance(target, Name) and target.name == SYMBOL_ACTIVE:
        return Directive(KEEP_ALIVE, body.left)
    if isinstance(target, Name) and target.name == SYMBOL_EOT:
        return Directive(END_OF_TEST, body.left)
    if (isinstance(target, Unary) and target.op == "!" and isinstance(target.operand, Name)
            and target.operand.name == SYMBOL_ACTIVE):
        return Directive(TERMINATE, body.left)
    return None


def split_specs(decl: ScenarioTypeDecl) -> Tuple[List[Directive], List[Expr]]:
    """(directives, behavioural specs) of a scenario type"""
    directives, behaviour = [], []
    for spec in decl.specs:
        directive = directive_of(spec)
        if directive is None:
            behaviour.append(spec)
        else:
            directives.append(directive)
    return directives, behaviour


def frame_assignments(actions: Sequence[Action]) -> Iterator[Expr]:
    for action in actions:
        if isinstance(action, Assign) and isinstance(action.target, Name) and action.target.name == SYMBOL_FRAME:
            yield action.value
        elif isinstance(action, IfAction):
            yield from frame_assignments(action.then)
            yield from frame_assignments(action.orelse)


def is_observer(decl: ScenarioTypeDecl) -> bool:
    """True when every frame assignment of the scenario is the empty set"""
    actions = list(decl.initact or ())
    for cndact in decl.cndacts:
        actions.extend(cndact.actions)
    return all(isinstance(value, SetLit) and not value.elements for value in frame_assignments(actions))


def effective_precondition(decl: ScenarioTypeDecl, directives: Sequence[Directive]) -> Expr:
    """Declared precondition, else the keep-alive conditions, else true"""
    if decl.precondition is not None:
        return decl.precondition
    keep = [d.cond for d in directives if d.kind == KEEP_ALIVE]
    return disjoin(keep) if keep else Literal(True)


# ════════════════════════════════════════════════════════
# CONTRIBUTION
# ════════════════════════════════════════════════════════

@dataclass
class Contribution:
    """
    Effects of one instance in one tick.

    Attributes:
        writes: Frame-checked parameter writes for the next valuation
        mutations: Collaboration changes, applied at the end of the tick
        aux: Auxiliary variables visible in the next valuation
        discarded: Symbols written by an instance that terminated in this tick
        fault: Fault record when the instance aborted the run
    """
    instance: str
    tick: int
    lifecycle: str = Lifecycle.PASSIVE.value
    activated: bool = False
    terminated: bool = False
    end_of_test: bool = False
    writes: Dict[str, Any] = field(default_factory=dict)
    mutations: List[Mutation] = field(default_factory=list)
    aux: Dict[str, Any] = field(default_factory=dict)
    discarded: List[str] = field(default_factory=list)
    frame: List[str] = field(default_factory=list)
    fault: Optional[Dict[str, Any]] = None

    @property
    def active_next(self) -> bool:
        return self.lifecycle == Lifecycle.ACTIVE.value

    def to_wire(self) -> Dict[str, Any]:
        return {
            'instance': self.instance,
            'tick': self.tick,
            'lifecycle': self.lifecycle,
            'activated': self.activated,
            'terminated': self.terminated,
            'end_of_test': self.end_of_test,
            'writes': {k: to_wire(v) for k, v in self.writes.items()},
            'mutations': [m.to_dict() for m in self.mutations],
            'aux': {k: to_wire(v) for k, v in self.aux.items()},
            'discarded': list(self.discarded),
            'frame': list(self.frame),
            'fault': self.fault,
        }

    @classmethod
    def from_wire(cls, data: Dict[str, Any]) -> "Contribution":
        return cls(
            instance=data['instance'],
            tick=data['tick'],
            lifecycle=data['lifecycle'],
            activated=data.get('activated', False),
            terminated=data.get('terminated', False),
            end_of_test=data.get('end_of_test', False),
            writes={k: from_wire(v) for k, v in (data.get('writes') or {}).items()},
            mutations=[Mutation.from_dict(m) for m in data.get('mutations') or []],
            aux={k: from_wire(v) for k, v in (data.get('aux') or {}).items()},
            discarded=list(data.get('discarded') or []),
            frame=list(data.get('frame') or []),
            fault=data.get('fault'),
        )


class _InstanceSink(ActionSink):
    """Routes action effects: aux variables, frame, parameter writes, mutations"""

    def __init__(self, runtime: "InstanceRuntime", tick: int):
        self.runtime = runtime
        self.tick = tick
        self.writes: Dict[str, Any] = {}
        self.mutations: List[Mutation] = []
        self.created: Dict[str, ObjectRef] = {}

    def assign(self, target: Expr, value: Any, env: Env):
        aux = self.runtime.aux
        if isinstance(target, Name):
            aux[target.name] = value
            env.locals[target.name] = value
            return
        if isinstance(target, Index) and isinstance(target.base, Name):
            name = target.base.name
            position = _int(evaluate(target.index, env))
            if position < 0:
                raise RuntimeFault(FaultKind.INDEX_RANGE, f"{name}[{position}]", name)
            current = list(aux.get(name) or ())
            while len(current) <= position:
                current.append(None)
            current[position] = value
            aux[name] = tuple(current)
            env.locals[name] = aux[name]
            return
        self.writes[reference(target, env)] = value

    def assign_frame(self, value: Expr, env: Env):
        frame = references(value, env)
        self.runtime.frame = frame
        env.locals[SYMBOL_FRAME] = frame

    def delete(self, action: CollDelete, env: Env):
        target = evaluate(action.target, env)
        if target is None:
            logger.debug(f"{self.runtime.id}: delete of a null object ignored")
            return
        if not isinstance(target, ObjectRef):
            raise RuntimeFault(FaultKind.TYPE_ERROR, "delete needs an object")
        self._queue("delete", target.path)

    def create_object(self, action: CollCreateObject, env: Env):
        collaboration = self.runtime.collaboration
        index = _int(evaluate(action.index, env)) if action.index is not None else None
        path = f"{collaboration}.{action.name}" + (f"[{index}]" if index is not None else "")
        self.created[path] = ObjectRef(path, action.type_name)
        self._queue("create_object", path, {'member': action.name, 'index': index, 'type': action.type_name})

    def create_interface(self, action: CollCreateInterface, env: Env):
        link_id = action.name
        if action.index is not None:
            link_id = f"{action.name}[{evaluate(action.index, env)}]"
        # objects created earlier in this tick are addressable through the collaboration
        resolver = Env(_with_created(env.valuation, self.created), env.consts, env.locals, env.spec)
        payload = {'from': reference(action.source, resolver), 'to': reference(action.target, resolver)}
        self._queue("create_interface", link_id, payload)

    def _queue(self, kind: str, target: str, payload: Optional[Dict[str, Any]] = None):
        self.mutations.append(Mutation(self.tick, self.runtime.id, len(self.mutations), kind, target,
                                       dict(payload or {})))


def _with_created(valuation: Mapping[str, Any], created: Mapping[str, ObjectRef]) -> Mapping[str, Any]:
    if not created:
        return valuation
    overlay = dict(valuation)
    for path, ref in created.items():
        head, _, tail = path.partition("[")
        if not tail:
            overlay[head] = ref
            continue
        index = int(tail.rstrip("]"))
        slots = list(overlay.get(head) or ())
        while len(slots) <= index:
            slots.append(None)
        slots[index] = ref
        overlay[head] = tuple(slots)
    return overlay


# ════════════════════════════════════════════════════════
# SYNTHESIS HELPERS
# ════════════════════════════════════════════════════════

def _bool_literal(expr: Expr) -> Optional[bool]:
    if isinstance(expr, Literal) and isinstance(expr.value, bool):
        return expr.value
    return None


def fold(expr: Expr, unknowns: Set[str], env: Env) -> Expr:
    """Evaluate every boolean sub-term that reads none of the unknowns"""
    if not (free_names(expr) & unknowns):
        try:
            value = evaluate(expr, env)
        except RuntimeFault:
            return expr
        return Literal(value) if isinstance(value, bool) else expr
    if isinstance(expr, Unary) and expr.op == "!":
        inner = fold(expr.operand, unknowns, env)
        value = _bool_literal(inner)
        return Literal(not value) if value is not None else Unary("!", inner)
    if not (isinstance(expr, Binary) and expr.op in BOOLEAN_BINARY):
        return expr
    left, right = fold(expr.left, unknowns, env), fold(expr.right, unknowns, env)
    lv, rv = _bool_literal(left), _bool_literal(right)
    if expr.op == "&&":
        if lv is False or rv is False:
            return Literal(False)
        if lv is True:
            return right
        if rv is True:
            return left
    elif expr.op == "||":
        if lv is True or rv is True:
            return Literal(True)
        if lv is False:
            return right
        if rv is False:
            return left
    elif expr.op == "=>":
        if lv is False or rv is True:
            return Literal(True)
        if lv is True:
            return right
        if rv is False:
            return Unary("!", left)
    elif expr.op == "<=>":
        if lv is not None and rv is not None:
            return Literal(lv == rv)
        if lv is not None:
            return right if lv else Unary("!", right)
        if rv is not None:
            return left if rv else Unary("!", left)
    return Binary(expr.op, left, right)


def abstract_frame(expr: Expr, frame: frozenset, env: Env) -> Tuple[Expr, Dict[str, str]]:
    """Replace framed parameter references by fresh names; returns (expr, name -> symbol)"""
    names: Dict[str, str] = {}

    def visit(e: Expr) -> Expr:
        if isinstance(e, (Field, Index)):
            try:
                symbol = reference(e, env)
            except RuntimeFault:
                symbol = None
            if symbol is not None and symbol in frame:
                return Name(names.setdefault(symbol, f"__w{len(names)}"))
        if isinstance(e, (Comprehension, Forall)):
            return e
        return map_children(e, visit)

    result = visit(expr)
    return result, {name: symbol for symbol, name in names.items()}


# ════════════════════════════════════════════════════════
# RUNTIME
# ════════════════════════════════════════════════════════

class InstanceRuntime:
    """
    One scheduled scenario instance.

    Args:
        node: Scheduling node (id, scenario, argument expressions)
        spec: Specification
        consts: Global constant values
        collaboration: Collaboration name used to resolve arguments
        solver_effort: Candidate budget of stimulus synthesis
    """

    def __init__(self, node: SchedNode, spec: Specification, consts: Mapping[str, Any],
                 collaboration: str, solver_effort: int = DEFAULT_SOLVER_EFFORT):
        decl = spec.scenario(node.scenario)
        if decl is None:
            raise ValueError(f"unknown scenario type '{node.scenario}'")
        self.id = node.id
        self.node = node
        self.decl = decl
        self.spec = spec
        self.consts = dict(consts)
        self.collaboration = collaboration
        self.solver_effort = solver_effort

        self.directives, behaviour = split_specs(decl)
        self.observer = is_observer(decl)
        self.precondition = effective_precondition(decl, self.directives)
        self.formulas = [
            (to_formula(expr, self.consts, spec), cycle_bound(expr, decl, spec))
            for expr in behaviour
        ]

        self.lifecycle = Lifecycle.PASSIVE
        self.aux: Dict[str, Any] = {}
        self.frame: frozenset = frozenset()
        self.monitors: List[Monitor] = []
        self.edges: Dict[int, bool] = {}
        self.activated_at: Optional[int] = None
        self.terminated_at: Optional[int] = None
        self.verdict: Optional[Verdict] = None
        self.reason = ""
        self.first_failure: Optional[int] = None
        self._unsolved_warned = False

    @property
    def role(self) -> str:
        return "ORACLE" if self.observer else "SIMULATION"

    @property
    def is_active(self) -> bool:
        return self.lifecycle == Lifecycle.ACTIVE

    def make_runnable(self):
        if self.lifecycle == Lifecycle.PASSIVE:
            self.lifecycle = Lifecycle.RUNNABLE

    # ════════════════════════════════════════════════════════
    # ENVIRONMENT
    # ════════════════════════════════════════════════════════

    def bound_params(self, valuation: Mapping[str, Any]) -> Dict[str, Any]:
        """Scenario parameters evaluated against a valuation"""
        env = Env(valuation, self.consts, {self.collaboration: CollabRef(self.collaboration)}, self.spec)
        if self.node.bindings:
            pairs = list(self.node.bindings)
        else:
            pairs = [(p.name, arg) for p, arg in zip(self.decl.params, self.node.args)]
        return {name: evaluate(expr, env) for name, expr in pairs}

    def locals_at(self, valuation: Mapping[str, Any]) -> Dict[str, Any]:
        values = self.bound_params(valuation)
        values.update(self.aux)
        values[SYMBOL_FRAME] = self.frame
        values[SYMBOL_ACTIVE] = self.is_active
        return values

    def _holds(self, locals_: Dict[str, Any]):
        def holds(expr: Expr, valuation) -> bool:
            return _bool(eval_expr(expr, valuation, self.consts, locals_, self.spec), expr)
        return holds

    # ════════════════════════════════════════════════════════
    # TICK
    # ════════════════════════════════════════════════════════

    def step(self, tick: int, current: Mapping[str, Any], tentative: Mapping[str, Any]) -> Contribution:
        """
        Process σ_tick.

        Args:
            tick: Index of the current valuation
            current: σ_tick
            tentative: σ_tick+1 as produced by objects, sensors and the executor
        """
        out = Contribution(self.id, tick)
        try:
            if self.lifecycle == Lifecycle.RUNNABLE:
                self._try_activate(tick, current, tentative, out)
            elif self.lifecycle == Lifecycle.ACTIVE:
                self._advance(tick, current, tentative, out)
        except RuntimeFault as fault:
            kind = fault.kind if fault.kind == FaultKind.FRAME_VIOLATION else FaultKind.ILLEGAL_SCHEDULE
            out.fault = {
                'kind': kind.value,
                'cause': fault.kind.value,
                'message': fault.message,
                'symbol': fault.symbol,
                'instance': self.id,
                'tick': tick,
            }
            logger.error(f"{self.id} aborted at tick {tick}: {fault}")
        out.lifecycle = self.lifecycle.value
        out.aux = dict(self.aux) if self.is_active else {}
        out.frame = sorted(self.frame)
        return out

    def _try_activate(self, tick: int, current: Mapping[str, Any], tentative: Mapping[str, Any],
                      out: Contribution):
        try:
            ready = eval_expr(self.precondition, current, self.consts, self.locals_at(current), self.spec) is True
        except RuntimeFault as fault:
            # e.g. the bound object was deleted; the instance stays runnable
            logger.debug(f"{self.id}: precondition undecided at tick {tick}: {fault}")
            return
        if not ready:
            return

        self.lifecycle = Lifecycle.ACTIVE
        self.activated_at = tick
        self.aux, self.frame, self.edges = {}, frozenset(), {}
        self.monitors = [Monitor(f, c, name=f"{self.id}#{k}") for k, (f, c) in enumerate(self.formulas)]
        out.activated = True
        logger.info(f"{self.id} activated at tick {tick}")

        sink = _InstanceSink(self, tick)
        env = Env(current, self.consts, self.locals_at(current), self.spec)
        execute(self.decl.initact or (), env, sink)
        self._commit(sink, current, tentative, out)

    def _advance(self, tick: int, current: Mapping[str, Any], tentative: Mapping[str, Any],
                 out: Contribution):
        locals_ = self.locals_at(current)
        holds = self._holds(locals_)
        for monitor in self.monitors:
            if monitor.step(current, holds) == Verdict.FAIL and self.first_failure is None:
                self.first_failure = tick
                logger.info(f"{self.id}: violation at tick {tick}: {formula_text(monitor.formula)}")

        terminating = any(holds(d.cond, current) for d in self.directives if d.kind == TERMINATE)
        out.end_of_test = any(holds(d.cond, current) for d in self.directives if d.kind == END_OF_TEST)

        sink = _InstanceSink(self, tick)
        env = Env(current, self.consts, locals_, self.spec)
        for k, cndact in enumerate(self.decl.cndacts):
            if self._fires(k, cndact.condition, env):
                execute(cndact.actions, env, sink)

        if terminating:
            out.mutations = sink.mutations
            out.discarded = sorted(sink.writes)
            out.terminated = True
            self.lifecycle = Lifecycle.TERMINATED
            self.terminated_at = tick
            logger.info(f"{self.id} terminated at tick {tick}")
            self._conclude()
        else:
            self._commit(sink, current, tentative, out)

    def _fires(self, k: int, condition, env: Env) -> bool:
        value = _bool(evaluate(condition.expr, env), condition.expr)
        if isinstance(condition, Change):
            previous = self.edges.get(k, False)
            self.edges[k] = value
            return value and not previous
        return value

    def _commit(self, sink: _InstanceSink, current: Mapping[str, Any], tentative: Mapping[str, Any],
                out: Contribution):
        for symbol in sink.writes:
            if symbol not in self.frame:
                raise RuntimeFault(FaultKind.FRAME_VIOLATION, f"{self.id} writes {symbol} outside its frame",
                                   symbol)
        writes = dict(sink.writes)
        if not self.observer and self.frame:
            base = dict(tentative)
            base.update(writes)
            for symbol, value in self._synthesize(base, self.locals_at(current)).items():
                writes.setdefault(symbol, value)
        out.writes = writes
        out.mutations = sink.mutations

    # ════════════════════════════════════════════════════════
    # SYNTHESIS
    # ════════════════════════════════════════════════════════

    def _synthesize(self, base: Mapping[str, Any], locals_: Dict[str, Any]) -> Dict[str, Any]:
        """Framed values making the pending obligations hold at the next valuation"""
        if not self.monitors:
            return {}
        env = Env(base, self.consts, locals_, self.spec)
        for eager in (True, False):
            constraint = make_and(now_constraint(m.state, m.cycle, eager) for m in self.monitors)
            if is_true(constraint):
                return {}
            if is_false(constraint):
                continue
            expr = formula_to_expr(constraint)
            try:
                if evaluate(expr, env) is True:
                    return {}
            except RuntimeFault:
                pass
            abstracted, slots = abstract_frame(expr, self.frame, env)
            folded = fold(abstracted, set(slots), env)
            if literal_true(folded):
                return {}
            if not slots or _bool_literal(folded) is False:
                continue
            domains = {name: domain_for(parameter_type(self.spec, symbol), self.spec)
                       for name, symbol in slots.items()}
            try:
                result = solve_guard(folded, domains, self.consts, self.spec, fixed=locals_,
                                     effort=self.solver_effort, base=base)
            except (UnsupportedTerm, SolverEffortExceeded) as e:
                logger.warning(f"{self.id}: cannot synthesize framed values: {e}")
                return {}
            if result is UNSAT:
                continue
            return {slots[name]: value for name, value in result.items()
                    if not (slots[name] in base and values_equal(base[slots[name]], value))}
        if not self._unsolved_warned:
            logger.warning(f"{self.id}: no framed values satisfy the pending obligations")
            self._unsolved_warned = True
        return {}

    # ════════════════════════════════════════════════════════
    # VERDICTS
    # ════════════════════════════════════════════════════════

    def _conclude(self):
        if not self.observer:
            return
        failed = [m for m in self.monitors if m.finalize() == Verdict.FAIL]
        self.verdict = Verdict.FAIL if failed else Verdict.PASS
        self.reason = "; ".join(f"temporal violation: {formula_text(m.formula)}" for m in failed)

    def finish(self, tick: int, final: Mapping[str, Any]):
        """Close the run at the final valuation σ_tick"""
        if self.is_active:
            try:
                holds = self._holds(self.locals_at(final))
                for monitor in self.monitors:
                    monitor.step(final, holds)
            except RuntimeFault as fault:
                logger.error(f"{self.id}: final valuation not evaluable: {fault}")
                if self.observer:
                    self.verdict, self.reason = Verdict.FAIL, f"{fault.kind.value}: {fault.message}"
                return
            self._conclude()
        elif self.activated_at is None and self.observer:
            self.verdict, self.reason = Verdict.PASS, "not activated"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'scenario': self.decl.name,
            'role': self.role,
            'lifecycle': self.lifecycle.value,
            'activated_at': self.activated_at,
            'terminated_at': self.terminated_at,
            'verdict': self.verdict.value if self.verdict else None,
            'reason': self.reason,
            'first_failure': self.first_failure,
            'monitors': [m.to_dict() for m in self.monitors],
        }
