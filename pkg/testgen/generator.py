"""
Test Generator
Depth-first exploration of scenario automata along scheduling-graph paths

Features:
- One automaton per stimulus instance (unbound primitive parameters)
- Guarded-command state for auxiliary variables (initact, cndact)
- Each transition guard solved to a concrete stimulation valuation
- Paths combine per-instance cases in path order, capped by the budget
"""
import hashlib
import itertools
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

from config import (
    DEFAULT_MAX_CASES, DEFAULT_MAX_DEPTH, DEFAULT_MAX_PATHS, DEFAULT_SOLVER_EFFORT,
    GENERATION_SOFT_BOUND_S, SYMBOL_FRAME,
)
from engine.actions import ActionSink, execute
from engine.automaton import SymbolicAutomaton, abstract, build_automaton, build_phi_scsl, instance_constraint
from engine.evaluator import Env, RuntimeFault, eval_expr
from engine.ltlf import cycle_bound
from language.render import render, render_expr
from models.specification import (
    Change, Expr, Index, Literal, Name, PRIMITIVE_TYPES, ScenarioTypeDecl, Specification, conjoin,
)
from models.test_suite import TestCase, TestStep, TestSuite
from models.values import EnumLit, value_to_json
from testgen.scheduling import SchedNode, build_scheduling_graph, enumerate_paths
from testgen.solver import (
    UNSAT, Domain, GuardSolver, SolverEffortExceeded, UnsupportedTerm, domains_for, satisfiability_check,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass
class GenerationBudget:
    max_paths: int = DEFAULT_MAX_PATHS
    max_depth: int = DEFAULT_MAX_DEPTH
    max_cases: int = DEFAULT_MAX_CASES
    solver_effort: int = DEFAULT_SOLVER_EFFORT


# ════════════════════════════════════════════════════════
# GUARDED-COMMAND STATE
# ════════════════════════════════════════════════════════

class _AuxSink(ActionSink):
    """Writes auxiliary variables; object parameters and the frame are ignored"""

    def __init__(self, values: Dict[str, Any]):
        self.values = values

    def assign(self, target: Expr, value: Any, env: Env):
        if isinstance(target, Name):
            if target.name == SYMBOL_FRAME:
                return
            self.values[target.name] = value
            env.locals[target.name] = value
        elif isinstance(target, Index) and isinstance(target.base, Name) and target.base.name in self.values:
            current = list(self.values[target.base.name] or ())
            position = eval_expr(target.index, env.valuation, env.consts, env.locals, env.spec)
            while len(current) <= position:
                current.append(None)
            current[position] = value
            self.values[target.base.name] = tuple(current)
            env.locals[target.base.name] = self.values[target.base.name]


class GuardedCommandState:
    """
    Temporary variables of one scenario instance during symbolic traversal.

    initact runs once at the start; after each solved step the cndacts whose
    condition holds under the step's valuation update a copy of the state.
    """

    def __init__(self, scenario: ScenarioTypeDecl, consts: Mapping[str, Any], spec: Specification,
                 values: Optional[Dict[str, Any]] = None, last: Optional[Dict[int, Any]] = None):
        self.scenario = scenario
        self.consts = consts
        self.spec = spec
        self.values: Dict[str, Any] = dict(values or {})
        self.last: Dict[int, Any] = dict(last or {})

    @classmethod
    def initial(cls, scenario: ScenarioTypeDecl, consts: Mapping[str, Any], spec: Specification,
                bound: Mapping[str, Any]) -> "GuardedCommandState":
        state = cls(scenario, consts, spec)
        if scenario.initact:
            state._run(scenario.initact, dict(bound))
        return state

    def _run(self, actions, valuation: Mapping[str, Any]):
        env = Env(valuation, self.consts, dict(self.values), self.spec)
        sink = _AuxSink(self.values)
        for action in actions:
            try:
                execute((action,), env, sink)
            except RuntimeFault as e:
                # statements over object parameters have no symbolic value here
                logger.debug(f"{self.scenario.name}: action skipped during generation: {e}")

    def after_step(self, valuation: Mapping[str, Any]) -> "GuardedCommandState":
        """State after a solved step"""
        nxt = GuardedCommandState(self.scenario, self.consts, self.spec, self.values, self.last)
        for k, cndact in enumerate(self.scenario.cndacts):
            try:
                if isinstance(cndact.condition, Change):
                    value = eval_expr(cndact.condition.expr, valuation, self.consts, self.values, self.spec)
                    # rising edge; the value before the first evaluation counts as false
                    fire = value is True and self.last.get(k, False) is not True
                    nxt.last[k] = value
                else:
                    fire = eval_expr(cndact.condition.expr, valuation, self.consts, self.values, self.spec) is True
            except RuntimeFault as e:
                logger.debug(f"{self.scenario.name}: condition not decidable during generation: {e}")
                continue
            if fire:
                nxt._run(cndact.actions, valuation)
        return nxt


# ════════════════════════════════════════════════════════
# INSTANCES
# ════════════════════════════════════════════════════════

def _is_primitive(param, spec: Specification) -> bool:
    t = spec.resolve_type(param.type)
    return t.kind in PRIMITIVE_TYPES or t.kind == "enum"


def _literal_of(value: Any) -> Expr:
    if isinstance(value, EnumLit):
        return Name(value.name)
    return Literal(value)


@dataclass
class InstanceModel:
    """A stimulus instance prepared for exploration"""
    node: SchedNode
    scenario: ScenarioTypeDecl
    bound: Dict[str, Any]
    domains: Dict[str, Domain]
    automaton: SymbolicAutomaton
    build_seconds: float = 0.0


def instance_bindings(node: SchedNode, scenario: ScenarioTypeDecl, consts: Mapping[str, Any],
                      spec: Specification) -> Dict[str, Any]:
    """Constant values of the primitive parameters bound by the instance"""
    exprs: Dict[str, Expr] = dict(node.bindings)
    for param, arg in zip(scenario.params, node.args):
        exprs[param.name] = arg
    bound: Dict[str, Any] = {}
    for param in scenario.params:
        if param.name in exprs and _is_primitive(param, spec):
            try:
                bound[param.name] = eval_expr(exprs[param.name], {}, consts, spec=spec)
            except RuntimeFault as e:
                logger.debug(f"{node.id}: parameter {param.name} not constant: {e}")
    return bound


def is_stimulus_instance(node: SchedNode, scenario: ScenarioTypeDecl, consts: Mapping[str, Any],
                         spec: Specification) -> bool:
    bound = instance_bindings(node, scenario, consts, spec)
    return any(_is_primitive(p, spec) and p.name not in bound for p in scenario.params)


def prepare_instance(node: SchedNode, spec: Specification, consts: Mapping[str, Any],
                     effort: int = DEFAULT_SOLVER_EFFORT, cycle: Optional[int] = None) -> InstanceModel:
    """Build the automaton of one scheduled instance"""
    scenario = spec.scenario(node.scenario)
    bound = instance_bindings(node, scenario, consts, spec)
    domains = domains_for([p for p in scenario.params if _is_primitive(p, spec)], spec)
    c = cycle or max([cycle_bound(e, scenario, spec) for e in scenario.specs] or [1])

    started = time.perf_counter()
    phi_abs, amap = abstract(build_phi_scsl(scenario, consts, spec))
    constraint = instance_constraint((name, _literal_of(v)) for name, v in bound.items())
    automaton = build_automaton(phi_abs, amap, constraint, c,
                                satisfiability_check(domains, consts, spec, effort), name=node.id)
    elapsed = time.perf_counter() - started
    logger.debug(f"{node.id}: automaton with {len(automaton.states)} states in {elapsed:.3f}s")
    return InstanceModel(node, scenario, bound, domains, automaton, elapsed)


def check_build_time(instance: str, seconds: float, soft_bound: float = GENERATION_SOFT_BOUND_S) -> bool:
    """Warn when one automaton build exceeded the soft bound; returns False in that case"""
    if seconds > soft_bound:
        logger.warning(f"{instance}: automaton construction took {seconds:.2f}s (soft bound {soft_bound}s)")
        return False
    return True


def measure_builds(spec: Specification, consts: Mapping[str, Any], cycle: Optional[int] = None,
                   effort: int = DEFAULT_SOLVER_EFFORT,
                   soft_bound: float = GENERATION_SOFT_BOUND_S) -> Dict[str, float]:
    """
    Automaton build time of every scheduled instance, observers included.

    Returns:
        Instance id -> seconds, in scheduling order
    """
    timings: Dict[str, float] = {}
    for node in build_scheduling_graph(spec, consts).instances:
        if spec.scenario(node.scenario) is None:
            continue
        seconds = prepare_instance(node, spec, consts, effort, cycle).build_seconds
        timings[node.id] = seconds
        check_build_time(node.id, seconds, soft_bound)
    slow = sum(1 for s in timings.values() if s > soft_bound)
    logger.info(f"Measured {len(timings)} automaton build(s), {slow} over {soft_bound}s")
    return timings


# ════════════════════════════════════════════════════════
# EXPLORATION
# ════════════════════════════════════════════════════════

Step = Tuple[str, str, Dict[str, Any]]       # (transition, guard text, witness)


class InstanceExplorer:
    """DFS over one automaton; simple paths stopping at the first accepting state"""

    def __init__(self, model: InstanceModel, spec: Specification, consts: Mapping[str, Any],
                 budget: GenerationBudget):
        self.model = model
        self.spec = spec
        self.consts = consts
        self.budget = budget
        self.unsat: List[Dict[str, Any]] = []
        self.incomplete = False

    def explore(self) -> List[List[Step]]:
        aut = self.model.automaton
        gcs = GuardedCommandState.initial(self.model.scenario, self.consts, self.spec, self.model.bound)
        found: List[List[Step]] = []
        self._visit(aut.initial, [], gcs, {aut.initial}, found)
        order = {id(case): k for k, case in enumerate(found)}
        return sorted(found, key=lambda case: (len(case), order[id(case)]))

    def _visit(self, state: str, steps: List[Step], gcs: GuardedCommandState, visited: set,
               found: List[List[Step]]):
        aut = self.model.automaton
        if len(found) >= self.budget.max_cases:
            self.incomplete = True
            return
        if len(steps) >= self.budget.max_depth:
            self.incomplete = True
            return
        for t in aut.outgoing(state):
            if t.dst in visited:
                continue
            guard_text = render_expr(t.guard)
            solver = GuardSolver(self.model.domains, self.consts, self.spec, gcs.values, self.budget.solver_effort)
            try:
                witness = solver.solve(t.guard)
            except UnsupportedTerm as e:
                self.unsat.append({'instance': self.model.node.id, 'transition': f"{t.src} -> {t.dst}",
                                   'guard': guard_text, 'reason': str(e)})
                continue
            except SolverEffortExceeded as e:
                self.incomplete = True
                logger.warning(f"{self.model.node.id}: {e} at {t.src} -> {t.dst}")
                continue
            if witness is UNSAT:
                self.unsat.append({'instance': self.model.node.id, 'transition': f"{t.src} -> {t.dst}",
                                   'guard': guard_text, 'reason': 'UNSAT'})
                continue
            step = (f"{t.src} -> {t.dst}", guard_text, witness)
            if aut.state(t.dst).accepting:
                found.append(steps + [step])
                continue
            self._visit(t.dst, steps + [step], gcs.after_step(witness), visited | {t.dst}, found)


# ════════════════════════════════════════════════════════
# SUITE
# ════════════════════════════════════════════════════════

def spec_hash(spec: Specification) -> str:
    return hashlib.sha256(render(spec).encode("utf-8")).hexdigest()[:16]


def _steps(model: InstanceModel, case: List[Step], condition: str) -> List[TestStep]:
    return [
        TestStep(
            name=f"{model.node.id}-{k + 1}",
            stimulation={name: value_to_json(value) for name, value in witness.items()},
            condition=condition,
            instance=model.node.id,
            transition=transition,
            guard=guard,
        )
        for k, (transition, guard, witness) in enumerate(case)
    ]


def generate(spec: Specification, consts: Mapping[str, Any], budget: Optional[GenerationBudget] = None,
             seed: int = 0, name: Optional[str] = None, embed_conditions: bool = False,
             cycle: Optional[int] = None) -> TestSuite:
    """
    Generate the test suite of a specification.

    Args:
        spec: Typechecked specification
        consts: Global constant values (experiment overrides applied)
        budget: Path, depth, case and solver bounds
        seed: Recorded in the metadata; generation itself is deterministic
        name: Suite name (defaults to the system test name)
        embed_conditions: Put the instance's spec text into expected_observations
        cycle: Override of the per-scenario cycle bound
    """
    budget = budget or GenerationBudget()
    suite_name = name or (spec.systemtest.name if spec.systemtest else "suite")
    suite = TestSuite(suite_name, spec_hash=spec_hash(spec), seed=seed)

    graph = build_scheduling_graph(spec, consts)
    paths = enumerate_paths(graph, budget.max_paths + 1)
    if len(paths) > budget.max_paths:
        paths = paths[:budget.max_paths]
        suite.incomplete = True

    cases_of: Dict[str, List[List[TestStep]]] = {}
    for node in graph.instances:
        scenario = spec.scenario(node.scenario)
        if scenario is None or not is_stimulus_instance(node, scenario, consts, spec):
            continue
        model = prepare_instance(node, spec, consts, budget.solver_effort, cycle)
        check_build_time(node.id, model.build_seconds)
        explorer = InstanceExplorer(model, spec, consts, budget)
        found = explorer.explore()
        suite.unsat.extend(explorer.unsat)
        suite.incomplete |= explorer.incomplete
        condition = render_expr(conjoin(scenario.specs)) if embed_conditions else ""
        cases_of[node.id] = [_steps(model, case, condition) for case in found]
        logger.info(f"{node.id}: {len(found)} case(s), {len(explorer.unsat)} unsatisfiable transition(s)")

    seen = set()
    for path in paths:
        stimulus = [n for n in path if n in cases_of]
        if not stimulus or any(not cases_of[n] for n in stimulus):
            continue
        for combo in itertools.product(*(cases_of[n] for n in stimulus)):
            steps = [step for part in combo for step in part]
            key = repr([s.to_dict() for s in steps])
            if key in seen:
                continue
            if len(suite.cases) >= budget.max_cases:
                suite.incomplete = True
                break
            seen.add(key)
            suite.cases.append(TestCase(f"{suite_name}-{len(suite.cases) + 1}", steps, path))

    logger.info(f"Generated suite {suite_name}: {len(suite.cases)} case(s) over {len(paths)} path(s)")
    return suite
