"""
System Test Stepper
Advances a system test one observation tick at a time

Features:
- Object execution cycles: inputs latched at cycle start, outputs held for the cycle
- Interface propagation with one tick delay
- Scenario lifecycle along the scheduling graph
- Frame-checked scenario writes and collaboration mutations between ticks
- Trace with provenance, EoT handling and per-instance verdicts

One tick j turns σ_j into σ_j+1 in two halves: prepare() builds the tentative
next valuation from carry-over, stimulation, interfaces, object cycles and
sensors; conclude() merges the instance contributions, applies mutations and
lifecycle changes and appends the trace row. In a distributed run the
contributions come from agents between the two halves.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from config import (
    DEFAULT_MAX_TICKS, DEFAULT_SOLVER_EFFORT, SECONDS_PER_TICK, STIM_PREFIX, SYMBOL_EOT, SYMBOL_TIME,
)
from engine.collaboration import CollaborationState
from engine.evaluator import RuntimeFault, constant_values
from engine.instances import Contribution, InstanceRuntime
from engine.trace import Trace, TraceRow
from models.enums import Direction, FaultKind, Lifecycle, RunStatus, Verdict
from models.specification import ObjectTypeDecl, Specification
from models.test_suite import TestSuite
from models.values import ObjectRef
from testgen.scheduling import SchedulingGraph, build_scheduling_graph
from utils.logger import RunLog, setup_logger

logger = setup_logger(__name__)


def stim_symbol(key: str) -> str:
    return key if key.startswith(STIM_PREFIX) else f"{STIM_PREFIX}{key}"


def flatten_suite(suite: Optional[TestSuite]) -> List[Dict[str, Any]]:
    """Stimulation per tick: the steps of all cases, in order"""
    if suite is None:
        return []
    return [{stim_symbol(k): v for k, v in step.stimulation.items()}
            for case in suite.cases for step in case.steps]


# ════════════════════════════════════════════════════════
# OBJECTS AND THE SUT
# ════════════════════════════════════════════════════════

@dataclass
class ObjectRuntime:
    """
    Execution cycle of one live object.

    Attributes:
        symbols: Parameter name relative to the object (pos, s[1]) -> symbol
        outputs: Relative names of out parameters
        latched: Inputs read at the start of the running cycle
        held: Outputs computed in the running cycle, published at its end
    """
    path: str
    ref: ObjectRef
    decl: ObjectTypeDecl
    cycletime: int
    symbols: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    phase: int = 0
    latched: Dict[str, Any] = field(default_factory=dict)
    held: Dict[str, Any] = field(default_factory=dict)
    state: Dict[str, Any] = field(default_factory=dict)

    @property
    def index(self) -> Optional[int]:
        if self.path.endswith("]"):
            return int(self.path.rsplit("[", 1)[1][:-1])
        return None

    @property
    def output_symbols(self) -> List[str]:
        return [self.symbols[name] for name in self.outputs]


class SutModel:
    """
    Behaviour of the system under test.

    The base model has no behaviour: outputs keep their values and no sensor
    writes anything. Subclasses override the hooks they need.
    """
    name = "passive"

    def bind(self, world: "World"):
        self.world = world

    def initial_values(self, obj: ObjectRuntime) -> Dict[str, Any]:
        """Values of relative parameter names in σ_0 (or at creation)"""
        return {}

    def cycle(self, obj: ObjectRuntime, tick: int) -> Dict[str, Any]:
        """Outputs of the cycle starting at tick; obj.latched holds the inputs"""
        return {}

    def sensors(self, tick: int, current: Mapping[str, Any], nxt: Mapping[str, Any]) -> Dict[str, Any]:
        """Symbol values written into σ_tick+1 by the environment"""
        return {}

    def after_step(self, tick: int, current: Mapping[str, Any], nxt: Mapping[str, Any],
                   written: Mapping[str, str]):
        pass

    def on_event(self, tick: int, event: Dict[str, Any]):
        pass


@dataclass
class Tentative:
    """Output of prepare(): σ_tick+1 before scenario contributions"""
    tick: int
    valuation: Dict[str, Any]
    published: List[str]
    links: List[Tuple[str, str]]
    interfaces: List[Tuple[str, str]] = field(default_factory=list)
    cycles: Dict[str, Tuple[int, int]] = field(default_factory=dict)


# ════════════════════════════════════════════════════════
# WORLD
# ════════════════════════════════════════════════════════

class World:
    """
    State of one system test run.

    Args:
        spec: Type-checked specification with a system test configuration
        consts: Constant values (default: the declared values)
        suite: Test suite; step k is written into σ_k under the stim. prefix
        sut: SUT model (default: passive objects)
        seconds_per_tick: t_hat advance per tick
        cycletime_override: Cycle time applied to every object type
        max_ticks: Tick budget; exhausting it forces EoT and marks a timeout
        solver_effort: Candidate budget of stimulus synthesis
        mutation_shuffle_seed: Permute mutation arrival order (stress mode)
        run_log: User-visible run log
        local: Instance ids stepped in this process (default: all)
    """

    def __init__(self, spec: Specification, consts: Optional[Mapping[str, Any]] = None,
                 suite: Optional[TestSuite] = None, sut: Optional[SutModel] = None,
                 seconds_per_tick: float = SECONDS_PER_TICK, cycletime_override: Optional[int] = None,
                 max_ticks: int = DEFAULT_MAX_TICKS, solver_effort: int = DEFAULT_SOLVER_EFFORT,
                 mutation_shuffle_seed: Optional[int] = None, run_log: Optional[RunLog] = None,
                 local: Optional[Iterable[str]] = None):
        if max_ticks <= 0:
            raise ValueError("max_ticks must be positive")
        self.spec = spec
        self.consts = dict(consts) if consts is not None else constant_values(spec)
        self.seconds_per_tick = seconds_per_tick
        self.cycletime_override = cycletime_override
        self.max_ticks = max_ticks
        self.mutation_shuffle_seed = mutation_shuffle_seed
        self.run_log = run_log or RunLog()
        self.stimuli = flatten_suite(suite)

        self.collab = CollaborationState(spec, self.consts)
        self.graph: SchedulingGraph = build_scheduling_graph(spec, self.consts)
        self.runtimes: "OrderedDict[str, InstanceRuntime]" = OrderedDict(
            (node.id, InstanceRuntime(node, spec, self.consts, self.collab.name, solver_effort))
            for node in self.graph.instances
        )
        self.order = {instance_id: k for k, instance_id in enumerate(self.runtimes)}
        self.local = set(self.runtimes) if local is None else set(local)
        self.lifecycles: Dict[str, Lifecycle] = {i: Lifecycle.PASSIVE for i in self.runtimes}
        self.aux_symbols: Dict[str, List[str]] = {i: [] for i in self.runtimes}
        self.newly_runnable: List[str] = []

        self.objects: "OrderedDict[str, ObjectRuntime]" = OrderedDict()
        self.sut = sut or SutModel()
        self.sut.bind(self)

        self.tick = 0
        self.trace = Trace()
        self.finished = False
        self.timed_out = False
        self.fault: Optional[Dict[str, Any]] = None
        self.verdicts: "OrderedDict[str, Dict[str, Any]]" = OrderedDict()
        self._pending: Optional[Tentative] = None

        self.current = self._initial_valuation()
        logger.info(f"World initialized: {len(self.runtimes)} instances, {len(self.objects)} objects, "
                    f"{len(self.stimuli)} stimulation steps")

    # ════════════════════════════════════════════════════════
    # SETUP
    # ════════════════════════════════════════════════════════

    def _cycletime(self, decl: ObjectTypeDecl) -> int:
        return self.cycletime_override or decl.cycletime

    def _add_object(self, path: str, valuation: Dict[str, Any]):
        ref = self.collab.objects[path]
        decl = self.collab.object_type(path)
        obj = ObjectRuntime(path, ref, decl, self._cycletime(decl))
        for symbol, param, _ in self.collab.parameter_symbols(path):
            relative = symbol[len(path) + 1:]
            obj.symbols[relative] = symbol
            if param.direction == Direction.OUT:
                obj.outputs.append(relative)
        self.objects[path] = obj
        valuation.update(self.collab.initial_values(path))
        for relative, value in self.sut.initial_values(obj).items():
            if relative in obj.symbols:
                valuation[obj.symbols[relative]] = value
        self.trace.outputs[path] = obj.output_symbols

    def _initial_valuation(self) -> Dict[str, Any]:
        valuation: Dict[str, Any] = {}
        for ref in self.collab.live_objects():
            self._add_object(ref.path, valuation)
        valuation.update(self.collab.handles())
        if self.stimuli:
            valuation.update(self.stimuli[0])
        valuation[SYMBOL_EOT] = False
        valuation[SYMBOL_TIME] = 0.0
        for instance_id in self.runtimes:
            valuation[f"{instance_id}.active"] = False

        events = []
        for instance_id in self._entries():
            self._make_runnable(instance_id)
            events.append({'kind': 'runnable', 'instance': instance_id})
        self.trace.append(TraceRow(0, dict(valuation), events=events))
        return valuation

    def _entries(self) -> List[str]:
        root = self.graph.root
        if root is None:
            return []
        if self.graph.nodes[root].virtual:
            return self.graph.successors(root)
        return [root]

    def _make_runnable(self, instance_id: str):
        self.lifecycles[instance_id] = Lifecycle.RUNNABLE
        self.runtimes[instance_id].make_runnable()
        self.newly_runnable.append(instance_id)

    # ════════════════════════════════════════════════════════
    # TICK
    # ════════════════════════════════════════════════════════

    @property
    def t_hat(self) -> float:
        return self.current[SYMBOL_TIME]

    def time_of(self, tick: int) -> float:
        return round(tick * self.seconds_per_tick, 9)

    def prepare(self) -> Tentative:
        """σ_tick+1 from carry-over, stimulation, interfaces, object cycles and sensors"""
        if self.finished:
            raise RuntimeError("run already finished")
        j = self.tick
        current = self.current
        nxt = dict(current)
        if j + 1 < len(self.stimuli):
            nxt.update(self.stimuli[j + 1])

        links = []
        interfaces = []
        for link in self.collab.interfaces.values():
            if self.collab.is_live(link.source_object) and self.collab.is_live(link.target_object):
                interfaces.append((link.source, link.target))
                if link.source in current:
                    nxt[link.target] = current[link.source]
                    links.append((link.source, link.target))

        published = []
        cycles = {path: (obj.cycletime, obj.phase) for path, obj in self.objects.items()}
        for obj in self.objects.values():
            if obj.phase == 0:
                obj.latched = {name: current.get(symbol) for name, symbol in obj.symbols.items()}
                obj.held = {} if obj.decl.auxiliary else {
                    k: v for k, v in self.sut.cycle(obj, j).items() if k in obj.outputs
                }
            if obj.phase == obj.cycletime - 1:
                for name, value in obj.held.items():
                    nxt[obj.symbols[name]] = value
                published.append(obj.path)
            obj.phase = (obj.phase + 1) % obj.cycletime

        nxt.update(self.sut.sensors(j, current, nxt))
        nxt.update(self.collab.handles())
        nxt[SYMBOL_EOT] = False
        nxt[SYMBOL_TIME] = self.time_of(j + 1)
        self._pending = Tentative(j, nxt, published, links, interfaces, cycles)
        return self._pending

    def contribute(self, tentative: Optional[Tentative] = None) -> List[Contribution]:
        """Contributions of the locally hosted instances that are runnable or active"""
        tentative = tentative or self._pending
        result = []
        for instance_id, runtime in self.runtimes.items():
            if instance_id in self.local and runtime.lifecycle in (Lifecycle.RUNNABLE, Lifecycle.ACTIVE):
                result.append(runtime.step(self.tick, self.current, tentative.valuation))
        return result

    def conclude(self, contributions: Sequence[Contribution]) -> TraceRow:
        """Merge contributions, apply mutations and lifecycle changes, append σ_tick+1"""
        if self._pending is None or self._pending.tick != self.tick:
            raise RuntimeError("conclude() without prepare()")
        j = self.tick
        current = self.current
        tentative = self._pending
        nxt = tentative.valuation
        self._pending = None
        self.newly_runnable = []
        contributions = sorted(contributions, key=lambda c: self.order.get(c.instance, len(self.order)))

        written: Dict[str, str] = {}
        frames: Dict[str, List[str]] = {}
        events: List[Dict[str, Any]] = []
        try:
            for c in contributions:
                if c.fault is not None:
                    raise _Abort(c.fault)
                for symbol, value in c.writes.items():
                    if symbol in written and written[symbol] != c.instance:
                        raise _Abort(_fault(FaultKind.ILLEGAL_SCHEDULE,
                                            f"{written[symbol]} and {c.instance} both write {symbol}",
                                            symbol, c.instance, j))
                    if symbol not in nxt:
                        raise _Abort(_fault(FaultKind.ILLEGAL_SCHEDULE, f"{c.instance} writes unknown {symbol}",
                                            symbol, c.instance, j))
                    nxt[symbol] = value
                    written[symbol] = c.instance
                if c.writes:
                    frames[c.instance] = list(c.frame)
                for mutation in c.mutations:
                    self.collab.queue(mutation)

            for event in self.collab.apply_pending(self.mutation_shuffle_seed):
                events.append(event)
                self._structural(event, nxt)
                self.sut.on_event(j, event)
        except _Abort as abort:
            self.fault = abort.fault
        except RuntimeFault as fault:
            self.fault = _fault(fault.kind, fault.message, fault.symbol, None, j)
        nxt.update(self.collab.handles())

        for c in contributions:
            self._lifecycle(c, nxt, events)
        for c in contributions:
            if c.terminated:
                self._release_successors(c.instance, events)

        end = self.fault is not None or any(c.end_of_test for c in contributions)
        if not end and not any(lc in (Lifecycle.ACTIVE, Lifecycle.RUNNABLE) for lc in self.lifecycles.values()):
            end = True
            logger.info(f"No instance left to run at tick {j + 1}")
        if not end and j + 1 >= self.max_ticks:
            end = True
            self.timed_out = True
            events.append({'kind': 'timeout', 'tick': j + 1})
            logger.warning(f"Tick budget of {self.max_ticks} exhausted")
        nxt[SYMBOL_EOT] = end

        row = TraceRow(j + 1, dict(nxt), written, frames, list(tentative.published), list(tentative.links), events,
                       list(tentative.interfaces), dict(tentative.cycles))
        self.trace.append(row)
        self.sut.after_step(j, current, nxt, written)
        self.current = nxt
        self.tick = j + 1
        if end:
            self._finish()
        return row

    def step(self) -> TraceRow:
        tentative = self.prepare()
        return self.conclude(self.contribute(tentative))

    def run_to_end(self) -> "World":
        while not self.finished:
            self.step()
        return self

    # ════════════════════════════════════════════════════════
    # STRUCTURE AND LIFECYCLE
    # ════════════════════════════════════════════════════════

    def _structural(self, event: Dict[str, Any], nxt: Dict[str, Any]):
        kind, path = event['kind'], event['target']
        if kind == "delete" and not event.get('noop'):
            obj = self.objects.pop(path, None)
            prefix = f"{path}."
            for symbol in [s for s in nxt if s.startswith(prefix)]:
                del nxt[symbol]
            if obj is not None:
                self.trace.outputs.pop(path, None)
        elif kind == "create_object":
            self._add_object(path, nxt)

    def _lifecycle(self, c: Contribution, nxt: Dict[str, Any], events: List[Dict[str, Any]]):
        instance_id = c.instance
        self.lifecycles[instance_id] = Lifecycle(c.lifecycle)
        for symbol in self.aux_symbols[instance_id]:
            nxt.pop(symbol, None)
        self.aux_symbols[instance_id] = []
        if c.active_next:
            for name, value in c.aux.items():
                symbol = f"{instance_id}.{name}"
                nxt[symbol] = value
                self.aux_symbols[instance_id].append(symbol)
        nxt[f"{instance_id}.active"] = c.active_next
        if c.activated:
            events.append({'kind': 'activated', 'instance': instance_id, 'tick': c.tick})
        if c.terminated:
            events.append({'kind': 'terminated', 'instance': instance_id, 'tick': c.tick})
        if c.discarded:
            events.append({'kind': 'discarded', 'instance': instance_id, 'symbols': list(c.discarded)})

    def _release_successors(self, instance_id: str, events: List[Dict[str, Any]]):
        for successor in self.graph.successors(instance_id):
            if self.lifecycles.get(successor) != Lifecycle.PASSIVE:
                continue
            predecessors = [p for p in self.graph.predecessors(successor) if not self.graph.nodes[p].virtual]
            if all(self.lifecycles.get(p) == Lifecycle.TERMINATED for p in predecessors):
                self._make_runnable(successor)
                events.append({'kind': 'runnable', 'instance': successor})

    def retire(self, instance_ids: Iterable[str]):
        """Stop scheduling instances whose host was lost; successors are not released"""
        for instance_id in instance_ids:
            if self.lifecycles.get(instance_id) != Lifecycle.TERMINATED:
                self.lifecycles[instance_id] = Lifecycle.TERMINATED
                logger.warning(f"{instance_id} retired at tick {self.tick}")

    # ════════════════════════════════════════════════════════
    # END OF RUN
    # ════════════════════════════════════════════════════════

    def _finish(self):
        self.finished = True
        if self.fault is None:
            for instance_id in sorted(self.local, key=self.order.get):
                runtime = self.runtimes[instance_id]
                runtime.finish(self.tick, self.current)
                if runtime.verdict is not None:
                    self.record_verdict(instance_id, runtime.verdict, runtime.reason)
        else:
            logger.error(f"Run aborted at tick {self.tick}: {self.fault['kind']}: {self.fault['message']}")
        logger.info(f"Run finished at tick {self.tick} (t_hat={self.t_hat}): {self.status.value}")

    def record_verdict(self, instance_id: str, verdict: Verdict, reason: str = ""):
        """Register an observer verdict (local or reported by an agent)"""
        self.verdicts[instance_id] = {'instance': instance_id, 'verdict': verdict.value, 'reason': reason}
        message = f"{verdict.value}." if verdict == Verdict.PASS else f"{verdict.value}: {reason}"
        self.run_log.tagged(f"{instance_id}-ORA", message)

    @property
    def status(self) -> RunStatus:
        if self.fault is not None:
            return RunStatus.ABORTED
        if any(v['verdict'] == Verdict.FAIL.value for v in self.verdicts.values()):
            return RunStatus.FAIL
        if self.timed_out or not self.finished:
            return RunStatus.INCOMPLETE
        return RunStatus.PASS

    def instance_summaries(self) -> List[Dict[str, Any]]:
        result = []
        for instance_id, runtime in self.runtimes.items():
            entry = runtime.to_dict()
            entry['lifecycle'] = self.lifecycles[instance_id].value
            if instance_id in self.verdicts:
                entry['verdict'] = self.verdicts[instance_id]['verdict']
                entry['reason'] = self.verdicts[instance_id]['reason']
            result.append(entry)
        return result

class _Abort(Exception):
    def __init__(self, fault: Dict[str, Any]):
        super().__init__(fault.get('message', ''))
        self.fault = fault


def _fault(kind: FaultKind, message: str, symbol: Optional[str], instance: Optional[str],
           tick: int) -> Dict[str, Any]:
    return {'kind': kind.value, 'cause': kind.value, 'message': message, 'symbol': symbol,
            'instance': instance, 'tick': tick}
