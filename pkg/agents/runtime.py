"""
Agent Runtime
Roster of a distributed run and the tick loop of one agent

Features:
- Roster validation: unique ids, exactly one COORDINATOR, every instance hosted once
- Default deployment grouping (one harness per object, command-centre handlers, EPM)
- Ingestion merges messages into the input state; evaluation reads only a snapshot
- Idempotent replies: a repeated request is answered from the cached reply
"""
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Mapping, Optional, Tuple

from agents.messages import MessageKind, StateMessage
from agents.transport import Endpoint
from config import (
    DEFAULT_MAX_TICKS, DEFAULT_SOLVER_EFFORT, DEFAULT_TICK_MS, SECONDS_PER_TICK, SILENCE_LIMIT_TICKS,
    START_TIMEOUT_S,
)
from engine.instances import InstanceRuntime
from engine.stepper import SutModel
from managers.tick_manager import TickManager
from models.enums import AgentRole, Lifecycle
from models.specification import Specification
from models.test_suite import TestSuite
from models.values import ObjectRef
from testgen.scheduling import SchedulingGraph, build_scheduling_graph
from utils.logger import setup_logger

logger = setup_logger(__name__)

COORDINATOR_ID = "coordinator"


@dataclass
class RunConfig:
    """
    Settings of one system test run.

    Attributes:
        spec: Type-checked specification with a system test configuration
        consts: Constant values (overrides applied)
        suite: Stimulation suite, one step per tick
        sut: SUT model driving the objects (passive when None)
        roster: Agent deployment (default grouping when None)
        mode: Transport mode, inproc or udp
        seed: Seed of datagram loss and of stress-mode mutation order
        loss: Datagram loss probability
        tick_ms: Wall-clock tick period of the agents
        pace: Hold every tick for its full period
        cycletime: Cycle time applied to every object type
        stress: Permute mutation arrival order with the seed
        start_time: Logical start of the run log (fixed default for reproducible logs)
        experiment: Id of the reproduced experiment
    """
    spec: Specification
    consts: Dict[str, Any]
    suite: Optional[TestSuite] = None
    sut: Optional[SutModel] = None
    roster: Optional["Roster"] = None
    mode: str = "inproc"
    seed: int = 0
    loss: float = 0.0
    tick_ms: int = DEFAULT_TICK_MS
    pace: bool = False
    cycletime: Optional[int] = None
    seconds_per_tick: float = SECONDS_PER_TICK
    max_ticks: int = DEFAULT_MAX_TICKS
    solver_effort: int = DEFAULT_SOLVER_EFFORT
    stress: bool = False
    start_time: Optional[datetime] = None
    experiment: Optional[str] = None
    start_timeout_s: float = START_TIMEOUT_S
    silence_limit: int = SILENCE_LIMIT_TICKS


# ════════════════════════════════════════════════════════
# ROSTER
# ════════════════════════════════════════════════════════

@dataclass
class RosterEntry:
    """One agent of a run and the instances it hosts"""
    agent_id: str
    role: AgentRole
    instances: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {'agent_id': self.agent_id, 'role': self.role.value, 'instances': list(self.instances)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RosterEntry':
        return cls(data['agent_id'], AgentRole(data['role']), list(data.get('instances', [])))


class Roster:
    """Agents of a distributed run"""

    def __init__(self, entries: Optional[List[RosterEntry]] = None):
        self.entries: List[RosterEntry] = list(entries or [])

    def add(self, entry: RosterEntry) -> RosterEntry:
        self.entries.append(entry)
        return entry

    def get(self, agent_id: str) -> Optional[RosterEntry]:
        for entry in self.entries:
            if entry.agent_id == agent_id:
                return entry
        return None

    @property
    def hosting(self) -> List[RosterEntry]:
        """Entries hosting at least one instance"""
        return [e for e in self.entries if e.instances]

    def host_of(self, instance_id: str) -> Optional[str]:
        for entry in self.entries:
            if instance_id in entry.instances:
                return entry.agent_id
        return None

    def validate(self, instance_ids: List[str]) -> Tuple[bool, str]:
        """
        Validate the roster against the scheduled instances.

        Returns:
            (valid: bool, reason: str)
        """
        ids = [e.agent_id for e in self.entries]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            return (False, f"duplicate agent ids: {', '.join(duplicates)}")
        coordinators = [e for e in self.entries if e.role == AgentRole.COORDINATOR]
        if len(coordinators) != 1:
            return (False, f"exactly one COORDINATOR required, found {len(coordinators)}")
        if coordinators[0].instances:
            return (False, "the COORDINATOR cannot host scenario instances")
        hosted: Dict[str, str] = {}
        for entry in self.entries:
            for instance_id in entry.instances:
                if instance_id in hosted:
                    return (False, f"{instance_id} hosted by {hosted[instance_id]} and {entry.agent_id}")
                hosted[instance_id] = entry.agent_id
        unknown = [i for i in hosted if i not in instance_ids]
        if unknown:
            return (False, f"unknown instances in roster: {', '.join(unknown)}")
        missing = [i for i in instance_ids if i not in hosted]
        if missing:
            return (False, f"instances without an agent: {', '.join(missing)}")
        return (True, "")

    def to_dict(self) -> List[Dict[str, Any]]:
        return [e.to_dict() for e in self.entries]

    @classmethod
    def from_dict(cls, data: List[Dict[str, Any]]) -> 'Roster':
        return cls([RosterEntry.from_dict(d) for d in data])


def _first_object(runtime: InstanceRuntime, initial: Mapping[str, Any]) -> Optional[str]:
    """Path of the first parameter bound to a single object"""
    try:
        values = runtime.bound_params(initial)
    except Exception as e:
        logger.debug(f"{runtime.id}: arguments not evaluable for grouping: {e}")
        return None
    for param in runtime.decl.params:
        value = values.get(param.name)
        if isinstance(value, ObjectRef):
            return value.path
    return None


def default_roster(runtimes: Mapping[str, InstanceRuntime], initial: Mapping[str, Any]) -> Roster:
    """
    Harness grouping of the scheduled instances.

    An instance joins the harness of the first single object it is bound to
    (a rover's chain, its mishap handler and any fault injection on it; the
    command-centre handlers). Observers bound to no single object go to the
    emergent property monitor, other instances to a shared simulation agent.
    """
    groups: "OrderedDict[str, List[InstanceRuntime]]" = OrderedDict()
    for runtime in runtimes.values():
        path = _first_object(runtime, initial)
        if path is not None:
            key = f"oeh-{path}"
        elif runtime.observer:
            key = "epm"
        else:
            key = "simulation"
        groups.setdefault(key, []).append(runtime)

    roster = Roster()
    for key, members in groups.items():
        if key == "epm":
            role = AgentRole.EPM
        elif all(m.observer for m in members):
            role = AgentRole.ORACLE
        else:
            role = AgentRole.SIMULATION
        roster.add(RosterEntry(key, role, [m.id for m in members]))
    roster.add(RosterEntry("sut", AgentRole.SUT))
    roster.add(RosterEntry("executor", AgentRole.EXECUTOR))
    roster.add(RosterEntry(COORDINATOR_ID, AgentRole.COORDINATOR))
    return roster


# ════════════════════════════════════════════════════════
# AGENT
# ════════════════════════════════════════════════════════

@dataclass(frozen=True)
class Snapshot:
    """Consistent input of one evaluation, stamped with the message versions it came from"""
    tick: int
    current: Mapping[str, Any]
    tentative: Mapping[str, Any]
    version: Tuple[int, int]


class Agent:
    """
    One harness of a distributed run.

    The agent hosts its own instance runtimes. Per tick it receives σ_j and the
    tentative σ_j+1 from the coordinator, evaluates the hosted instances on a
    snapshot of both and answers with their contributions.

    Args:
        entry: Roster entry (id, role, hosted instances)
        spec: Type-checked specification
        consts: Constant values of the run
        endpoint: Transport endpoint of this agent
        tick_ms: Tick period used for overrun accounting
        solver_effort: Candidate budget of stimulus synthesis
    """

    def __init__(self, entry: RosterEntry, spec: Specification, consts: Mapping[str, Any],
                 endpoint: Endpoint, tick_ms: int = DEFAULT_TICK_MS,
                 solver_effort: int = DEFAULT_SOLVER_EFFORT,
                 graph: Optional[SchedulingGraph] = None):
        self.entry = entry
        self.id = entry.agent_id
        self.role = entry.role
        self.spec = spec
        self.consts = dict(consts)
        self.endpoint = endpoint
        self.solver_effort = solver_effort
        self.graph = graph or build_scheduling_graph(spec, self.consts)
        self.ticks = TickManager(tick_ms)

        self.runtimes: "OrderedDict[str, InstanceRuntime]" = OrderedDict()
        self.input_state: Dict[Tuple[int, str], Tuple[int, Dict[str, Any]]] = {}
        self.snapshot: Optional[Snapshot] = None
        self.replies: Dict[str, Tuple[int, StateMessage]] = {}
        self.evaluated_tick = -1
        self.finished = False
        self.stopped = False
        self.parse_failures = 0
        self._build_runtimes()
        logger.info(f"Agent {self.id} initialized ({self.role.value}, {len(self.runtimes)} instances)")

    def _build_runtimes(self):
        collaboration = self.spec.systemtest.collaboration.name
        self.runtimes.clear()
        for node in self.graph.instances:
            if node.id in self.entry.instances:
                self.runtimes[node.id] = InstanceRuntime(node, self.spec, self.consts, collaboration,
                                                         self.solver_effort)

    # ════════════════════════════════════════════════════════
    # INGESTION
    # ════════════════════════════════════════════════════════

    def join(self):
        self.endpoint.send(StateMessage(self.id, MessageKind.JOIN.value, 0, to=COORDINATOR_ID,
                                        body={'role': self.role.value, 'instances': list(self.runtimes)}))

    def pump(self) -> int:
        """Process every message that arrived; returns the number handled"""
        messages = self.endpoint.receive()
        for message in messages:
            try:
                self._dispatch(message)
            except Exception as e:
                # the previous input state of the sender stays in place
                self.parse_failures += 1
                logger.error(f"Agent {self.id}: cannot process {message.kind} for tick {message.tick}: {e}")
        return len(messages)

    def _dispatch(self, message: StateMessage):
        kind = message.kind
        if kind == MessageKind.HEARTBEAT.value:
            self.join()
        elif kind == MessageKind.TICK.value:
            self._on_tick(message)
        elif kind == MessageKind.FINISH.value:
            self._on_finish(message)
        elif kind == MessageKind.RESET.value:
            self.reset()
            self.stopped = bool(message.body.get('stop', True))

    def _merge(self, message: StateMessage):
        key = (message.tick, message.section)
        previous = self.input_state.get(key)
        if previous is None or previous[0] < message.seq:
            self.input_state[key] = (message.seq, message.values())

    def _take_snapshot(self, tick: int) -> Optional[Snapshot]:
        current = self.input_state.get((tick, "current"))
        tentative = self.input_state.get((tick, "next"))
        if current is None or tentative is None:
            return None
        return Snapshot(tick, dict(current[1]), dict(tentative[1]), (current[0], tentative[0]))

    # ════════════════════════════════════════════════════════
    # EVALUATION
    # ════════════════════════════════════════════════════════

    def _on_tick(self, message: StateMessage):
        tick = message.tick
        if tick < self.evaluated_tick or self.finished:
            return
        if tick == self.evaluated_tick:
            self._resend(MessageKind.CONTRIBUTION.value, tick)
            return
        for instance_id in message.body.get('runnable', []):
            if instance_id in self.runtimes:
                self.runtimes[instance_id].make_runnable()
        self._merge(message)
        snapshot = self._take_snapshot(tick)
        if snapshot is None:
            return
        self.snapshot = snapshot
        self._evaluate(snapshot)

    def _evaluate(self, snapshot: Snapshot):
        self.ticks.begin_tick(snapshot.tick)
        contributions = []
        for runtime in self.runtimes.values():
            if runtime.lifecycle in (Lifecycle.RUNNABLE, Lifecycle.ACTIVE):
                contribution = runtime.step(snapshot.tick, snapshot.current, snapshot.tentative)
                contributions.append(contribution.to_wire())
        self.ticks.end_tick(snapshot.tick)
        self.evaluated_tick = snapshot.tick
        self.input_state = {k: v for k, v in self.input_state.items() if k[0] > snapshot.tick}
        self._reply(StateMessage(self.id, MessageKind.CONTRIBUTION.value, snapshot.tick, to=COORDINATOR_ID,
                                 body={'contributions': contributions, 'version': list(snapshot.version)}))

    def _on_finish(self, message: StateMessage):
        if self.finished:
            self._resend(MessageKind.VERDICTS.value, message.tick)
            return
        final = message.values()
        verdicts = []
        for instance_id, runtime in self.runtimes.items():
            runtime.finish(message.tick, final)
            if runtime.verdict is not None:
                verdicts.append({'instance': instance_id, 'verdict': runtime.verdict.value,
                                 'reason': runtime.reason})
        self.finished = True
        self._reply(StateMessage(self.id, MessageKind.VERDICTS.value, message.tick, to=COORDINATOR_ID, body={
            'verdicts': verdicts,
            'instances': [r.to_dict() for r in self.runtimes.values()],
            'missed_ticks': self.ticks.missed_ticks,
            'parse_failures': self.parse_failures,
        }))

    def _reply(self, message: StateMessage):
        self.replies[message.kind] = (message.tick, message)
        self.endpoint.send(message)

    def _resend(self, kind: str, tick: int):
        cached = self.replies.get(kind)
        if cached is not None and cached[0] == tick:
            message = cached[1]
            self.endpoint.send(StateMessage(self.id, message.kind, message.tick, section=message.section,
                                            state=dict(message.state), body=dict(message.body), to=message.to))

    # ════════════════════════════════════════════════════════
    # LIFECYCLE
    # ════════════════════════════════════════════════════════

    def reset(self):
        """Fresh runtimes and empty state, ready for a re-execution"""
        self._build_runtimes()
        self.input_state.clear()
        self.replies.clear()
        self.snapshot = None
        self.evaluated_tick = -1
        self.finished = False
        self.parse_failures = 0
        self.ticks.reset()
        self.endpoint.reset()
        logger.info(f"Agent {self.id} reset")

    def serve(self, stop: threading.Event, poll_s: float = 0.005):
        """Agent loop for a dedicated thread (UDP mode)"""
        self.join()
        while not stop.is_set() and not self.stopped:
            if not self.pump():
                self.endpoint.wait(poll_s)
        self.endpoint.close()
        logger.info(f"Agent {self.id} stopped")
