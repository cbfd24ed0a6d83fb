"""
Coordinator
Drives a distributed system test in lockstep with the hosting agents

Features:
- Start barrier: heartbeats until every hosting agent has joined
- Per tick: σ_j and the tentative σ_j+1 out, contributions back, then conclude
- Re-requests to silent agents; liveness FAIL after the silence limit
- Final verdict collection and agent reset
"""
import time
from typing import Any, Callable, Dict, List, Optional, Set

from agents.messages import MessageKind, StateMessage, encode_state
from agents.runtime import COORDINATOR_ID, Agent, Roster
from agents.transport import TransportError
from config import RESEND_INTERVAL_S, SILENCE_LIMIT_TICKS, START_TIMEOUT_S
from engine.instances import Contribution
from engine.stepper import Tentative, World
from managers.schedule_manager import ScheduleManager
from managers.tick_manager import TickManager
from managers.verdict_manager import VerdictManager
from models.enums import Lifecycle
from utils.logger import setup_logger

logger = setup_logger(__name__)


class Coordinator:
    """
    Executor and clock of a distributed run.

    The coordinator owns the World: stimulation, interfaces, object cycles and
    sensors are computed here, scenario instances are stepped by the agents.

    Args:
        world: World built with local=() (no instance stepped in the coordinator)
        roster: Validated roster of the run
        bus: Transport bus shared with the agents
        agents: Agents pumped cooperatively by the coordinator (inproc mode);
            empty when the agents run in their own threads
        tick_ms: Tick period used for overrun accounting
        pace: Hold every tick for its full period
    """

    def __init__(self, world: World, roster: Roster, bus, agents: Optional[List[Agent]] = None,
                 tick_ms: int = 20, pace: bool = False,
                 silence_limit: int = SILENCE_LIMIT_TICKS,
                 start_timeout_s: float = START_TIMEOUT_S,
                 resend_interval_s: float = RESEND_INTERVAL_S,
                 clock: Callable[[], float] = time.monotonic):
        self.world = world
        self.roster = roster
        self.endpoint = bus.endpoint(COORDINATOR_ID)
        self.agents = list(agents or [])
        self.threaded = not self.agents
        self.silence_limit = silence_limit
        self.start_timeout_s = start_timeout_s
        self.resend_interval_s = resend_interval_s
        self.clock = clock

        self.schedule = ScheduleManager(world.graph)
        self.verdicts = VerdictManager(world)
        self.ticks = TickManager(tick_ms, pace)

        self.hosts = [e.agent_id for e in roster.hosting]
        self.joined: Set[str] = set()
        self.lost: Set[str] = set()
        self.silent: Dict[str, int] = {agent_id: 0 for agent_id in self.hosts}
        self.agent_reports: Dict[str, Dict[str, Any]] = {}
        self.remote_instances: Dict[str, Dict[str, Any]] = {}
        self.diagnostics: List[str] = []
        self.infrastructure_error: Optional[str] = None
        logger.info(f"Coordinator initialized ({len(self.hosts)} hosting agents, "
                    f"{'threaded' if self.threaded else 'cooperative'})")

    # ════════════════════════════════════════════════════════
    # RUN
    # ════════════════════════════════════════════════════════

    def run(self) -> bool:
        """
        Execute the run to its end.

        Returns:
            True if the run completed without an infrastructure error
        """
        try:
            if not self.start():
                return False
            while not self.world.finished:
                self.step()
            if self.world.fault is None:
                self.collect_verdicts()
            return self.infrastructure_error is None
        except TransportError as e:
            self.infrastructure_error = f"transport failure: {e}"
            logger.error(self.infrastructure_error)
            return False
        finally:
            self.shutdown()

    def start(self) -> bool:
        """Wait until every hosting agent has joined"""
        self.ticks.start()
        deadline = self.clock() + self.start_timeout_s
        expected = set(self.hosts)
        while not expected <= self.joined:
            self.endpoint.send(StateMessage(COORDINATOR_ID, MessageKind.HEARTBEAT.value, 0))
            self._pump_agents()
            for message in self._receive(self.resend_interval_s):
                if message.kind == MessageKind.JOIN.value:
                    self._on_join(message)
            if self.infrastructure_error:
                return False
            if self.clock() > deadline:
                missing = sorted(expected - self.joined)
                self.infrastructure_error = f"agents not reachable: {', '.join(missing)}"
                logger.error(f"Start barrier failed: {self.infrastructure_error}")
                return False
        logger.info(f"All {len(expected)} hosting agents joined")
        return True

    def _on_join(self, message: StateMessage):
        entry = self.roster.get(message.sender)
        if entry is None or not entry.instances:
            logger.debug(f"Ignoring join from {message.sender}")
            return
        announced = sorted(message.body.get('instances', []))
        if announced != sorted(entry.instances):
            self.infrastructure_error = (f"agent {message.sender} hosts {announced}, "
                                         f"roster expects {sorted(entry.instances)}")
            logger.error(self.infrastructure_error)
            return
        if message.sender not in self.joined:
            self.joined.add(message.sender)
            logger.info(f"Agent {message.sender} joined ({len(announced)} instances)")

    def step(self):
        """One tick: distribute, collect, conclude"""
        world = self.world
        tentative = world.prepare()
        self.ticks.begin_tick(tentative.tick)
        contributions = self._collect(tentative)
        accepted = []
        for contribution in contributions:
            ok, reason = self.schedule.check_contribution(contribution, world.lifecycles)
            if ok:
                accepted.append(contribution)
            else:
                self.diagnostics.append(f"tick {tentative.tick}: {reason}")
                logger.warning(f"Rejected contribution at tick {tentative.tick}: {reason}")
        row = world.conclude(accepted)
        self.schedule.record_row(row)
        self.ticks.end_tick(tentative.tick)

    # ════════════════════════════════════════════════════════
    # EXCHANGE
    # ════════════════════════════════════════════════════════

    def _expected(self) -> Set[str]:
        expected = set()
        for instance_id, lifecycle in self.world.lifecycles.items():
            if lifecycle in (Lifecycle.RUNNABLE, Lifecycle.ACTIVE):
                host = self.roster.host_of(instance_id)
                if host is not None and host not in self.lost:
                    expected.add(host)
        return expected

    def _send_tick(self, tentative: Tentative):
        world = self.world
        runnable = [i for i, lc in world.lifecycles.items() if lc == Lifecycle.RUNNABLE]
        body = {'runnable': runnable}
        self.endpoint.send(StateMessage(COORDINATOR_ID, MessageKind.TICK.value, tentative.tick,
                                        section="current", state=encode_state(world.current), body=body))
        self.endpoint.send(StateMessage(COORDINATOR_ID, MessageKind.TICK.value, tentative.tick,
                                        section="next", state=encode_state(tentative.valuation), body=body))

    def _collect(self, tentative: Tentative) -> List[Contribution]:
        tick = tentative.tick
        expected = self._expected()
        received: Dict[str, List[Contribution]] = {}
        self._send_tick(tentative)
        while True:
            self._pump_agents()
            for message in self._receive(self.resend_interval_s):
                if (message.kind == MessageKind.CONTRIBUTION.value and message.tick == tick
                        and message.sender in expected and message.sender not in received):
                    received[message.sender] = [Contribution.from_wire(c)
                                                for c in message.body.get('contributions', [])]
                    self.silent[message.sender] = 0
            missing = expected - set(received) - self.lost
            if not missing:
                break
            self._count_silence(missing, tick)
            if expected - self.lost - set(received):
                self._send_tick(tentative)
        result = []
        for agent_id in self.hosts:
            result.extend(received.get(agent_id, []))
        return result

    def _count_silence(self, missing: Set[str], tick: int):
        for agent_id in sorted(missing):
            self.silent[agent_id] += 1
            if self.silent[agent_id] > self.silence_limit:
                self._lose(agent_id, tick)

    def _lose(self, agent_id: str, tick: int):
        instances = self.roster.get(agent_id).instances
        self.lost.add(agent_id)
        self.verdicts.liveness_failure(agent_id, instances, self.silent[agent_id], tick)
        self.diagnostics.append(f"agent {agent_id} lost at tick {tick}")
        self.world.retire(instances)

    def collect_verdicts(self):
        """Close the monitors of all agents on the final valuation"""
        world = self.world
        expected = set(self.hosts) - self.lost
        records: List[Dict[str, Any]] = []
        finish = StateMessage(COORDINATOR_ID, MessageKind.FINISH.value, world.tick,
                              section="final", state=encode_state(world.current))
        self.endpoint.send(finish)
        while expected - set(self.agent_reports):
            self._pump_agents()
            for message in self._receive(self.resend_interval_s):
                if (message.kind == MessageKind.VERDICTS.value and message.sender in expected
                        and message.sender not in self.agent_reports):
                    self.agent_reports[message.sender] = message.body
                    records.extend(message.body.get('verdicts', []))
                    for summary in message.body.get('instances', []):
                        self.remote_instances[summary['id']] = summary
                    self.silent[message.sender] = 0
            missing = expected - set(self.agent_reports)
            if missing:
                for agent_id in sorted(missing):
                    self.silent[agent_id] += 1
                    if self.silent[agent_id] > self.silence_limit:
                        self._lose(agent_id, world.tick)
                        expected.discard(agent_id)
                if expected - set(self.agent_reports):
                    self.endpoint.send(StateMessage(COORDINATOR_ID, MessageKind.FINISH.value, world.tick,
                                                    section="final", state=dict(finish.state)))
        self.verdicts.save_all(records)
        for agent_id, report in self.agent_reports.items():
            if report.get('missed_ticks'):
                self.diagnostics.append(f"agent {agent_id}: {report['missed_ticks']} missed tick(s)")
            if report.get('parse_failures'):
                self.diagnostics.append(f"agent {agent_id}: {report['parse_failures']} message(s) not processed")
        if self.ticks.missed_ticks:
            self.diagnostics.append(f"coordinator: {self.ticks.missed_ticks} missed tick(s)")

    def shutdown(self):
        """Send RESET to every agent and detach"""
        try:
            self.endpoint.send(StateMessage(COORDINATOR_ID, MessageKind.RESET.value, self.world.tick,
                                            body={'stop': True}))
            self._pump_agents()
        except TransportError as e:
            logger.error(f"Reset not delivered: {e}")
        self.endpoint.close()

    # ════════════════════════════════════════════════════════
    # TRANSPORT
    # ════════════════════════════════════════════════════════

    def _pump_agents(self):
        for agent in self.agents:
            agent.pump()

    def _receive(self, timeout: float) -> List[StateMessage]:
        messages = self.endpoint.receive()
        if not messages and self.threaded:
            self.endpoint.wait(timeout)
            messages = self.endpoint.receive()
        return messages

    def instance_summaries(self) -> List[Dict[str, Any]]:
        """World summaries with the monitor state reported by the agents"""
        result = []
        for entry in self.world.instance_summaries():
            remote = self.remote_instances.get(entry['id'])
            if remote is not None:
                merged = dict(remote)
                merged['lifecycle'] = entry['lifecycle']
                merged['verdict'] = entry.get('verdict', remote.get('verdict'))
                merged['reason'] = entry.get('reason', remote.get('reason', ''))
                merged['host'] = self.roster.host_of(entry['id'])
                entry = merged
            result.append(entry)
        return result
