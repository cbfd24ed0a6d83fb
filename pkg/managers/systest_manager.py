"""
System Test Manager
Orchestrates system test runs using the World, the agents and the artifact store
"""
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import config
from agents.coordinator import Coordinator
from agents.rover_stub import RoverModel
from agents.runtime import Agent, RunConfig, Roster, default_roster
from agents.transport import TransportError, open_bus
from engine.evaluator import RuntimeFault, check_constraints, constant_values
from engine.stepper import World
from engine.trace import check_trace_laws
from language.parser import parse
from language.typecheck import typecheck
from models.enums import RunStatus
from models.run_report import RunReport
from models.source import Diagnostic, SourceSpan
from models.specification import Specification
from models.test_suite import TestCase, TestStep, TestSuite
from persistence.artifact_store import ArtifactStore
from testgen.generator import spec_hash
from testgen.suite_io import read_suite
from utils.logger import RunLog, setup_logger

logger = setup_logger(__name__)


@dataclass
class Experiment:
    """
    A reproducible system test setting from the experiments file.

    Attributes:
        id: Experiment id (gps-glitch, T-1, ...)
        spec: Specification file, relative to the data directory
        append_source: SCSL text appended to the specification (fault injection instances)
        consts: Constant overrides as plain JSON
        sut: Rover model settings (spin_up, load_ticks)
        suite: Stimulation steps
        expected: {status, verdicts, log, frozen_reports}
    """
    id: str
    description: str = ""
    spec: str = "rover.scsl"
    append_source: str = ""
    consts: Dict[str, Any] = field(default_factory=dict)
    sut: Dict[str, Any] = field(default_factory=dict)
    cycletime: Optional[int] = None
    seconds_per_tick: float = config.SECONDS_PER_TICK
    max_ticks: int = config.DEFAULT_MAX_TICKS
    suite: List[Dict[str, Any]] = field(default_factory=list)
    expected: Dict[str, Any] = field(default_factory=dict)

    @property
    def spec_path(self) -> str:
        path = Path(self.spec)
        return str(path if path.is_absolute() else Path(config.DATA_DIR) / path)

    def build_suite(self) -> TestSuite:
        steps = [TestStep.from_dict(step) for step in self.suite]
        return TestSuite(self.id, [TestCase(self.id, steps)])

    def build_sut(self) -> RoverModel:
        return RoverModel(**self.sut)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Experiment':
        return cls(
            id=data['id'],
            description=data.get('description', ''),
            spec=data.get('spec', 'rover.scsl'),
            append_source=data.get('append_source', ''),
            consts=dict(data.get('consts', {})),
            sut=dict(data.get('sut', {})),
            cycletime=data.get('cycletime'),
            seconds_per_tick=float(data.get('seconds_per_tick', config.SECONDS_PER_TICK)),
            max_ticks=int(data.get('max_ticks', config.DEFAULT_MAX_TICKS)),
            suite=list(data.get('suite', [])),
            expected=dict(data.get('expected', {}))
        )


class SystestManager:
    """
    System Test Manager - Main Orchestrator

    Delegates to:
    - World: step semantics (prepare / contribute / conclude)
    - Coordinator + Agents: distributed execution over a transport
    - ArtifactStore: run directory with suite, trace, logs and report

    Args:
        store: Artifact store; None keeps runs in memory only
    """

    def __init__(self, store: Optional[ArtifactStore] = None):
        self.store = store
        self.last_run_dir: Optional[Path] = None
        self.last_world: Optional[World] = None
        logger.info("SystestManager initialized")

    # ════════════════════════════════════════════════════════
    # LOADING
    # ════════════════════════════════════════════════════════

    def load_spec(self, path: str, append_source: str = "") -> Tuple[Optional[Specification], List[Diagnostic]]:
        """
        Parse and typecheck a specification file.

        Args:
            path: .scsl file
            append_source: Extra SCSL text appended before parsing

        Returns:
            (spec, diagnostics); spec is None when any error was found
        """
        try:
            source = Path(path).read_text(encoding="utf-8")
        except Exception as e:
            logger.error(f"Failed to read specification {path}: {e}")
            return None, [Diagnostic.error(f"cannot read specification: {e}", SourceSpan(str(path)))]
        if append_source:
            source = f"{source.rstrip()}\n{append_source}\n"
        result = parse(source, str(path))
        if isinstance(result, list):
            return None, result
        diagnostics = typecheck(result)
        if any(d.is_error for d in diagnostics):
            return None, diagnostics
        logger.info(f"Loaded specification {path}")
        return result, diagnostics

    def load_suite(self, path: str) -> Tuple[Optional[TestSuite], List[Diagnostic]]:
        return read_suite(path)

    def load_experiments(self, path: str = config.EXPERIMENTS_FILE) -> Dict[str, Experiment]:
        """Experiments by id (empty when the file cannot be read)"""
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
            experiments = [Experiment.from_dict(d) for d in data.get('experiments', [])]
            logger.info(f"Loaded {len(experiments)} experiments from {path}")
            return {e.id: e for e in experiments}
        except Exception as e:
            logger.error(f"Failed to load experiments {path}: {e}")
            return {}

    @staticmethod
    def resolve_consts(spec: Specification, overrides: Optional[Dict[str, Any]] = None
                       ) -> Tuple[Optional[Dict[str, Any]], List[str]]:
        """
        Constant values with overrides applied.

        Returns:
            (consts, problems); consts is None when a value cannot be built
            or a constraint is violated
        """
        try:
            consts = constant_values(spec, overrides)
        except RuntimeFault as fault:
            return None, [str(fault)]
        violated = check_constraints(spec, consts)
        if violated:
            return None, [f"constraint violated: {text}" for text in violated]
        return consts, []

    def config_for(self, experiment: Experiment, **overrides) -> Tuple[Optional[RunConfig], List[str]]:
        """Run configuration of an experiment (spec loaded and constants resolved)"""
        spec, diagnostics = self.load_spec(experiment.spec_path, experiment.append_source)
        if spec is None:
            return None, [str(d) for d in diagnostics if d.is_error]
        consts, problems = self.resolve_consts(spec, experiment.consts)
        if consts is None:
            return None, problems
        cfg = RunConfig(
            spec=spec,
            consts=consts,
            suite=experiment.build_suite(),
            sut=experiment.build_sut(),
            cycletime=experiment.cycletime,
            seconds_per_tick=experiment.seconds_per_tick,
            max_ticks=experiment.max_ticks,
            experiment=experiment.id,
        )
        for key, value in overrides.items():
            setattr(cfg, key, value)
        return cfg, []

    # ════════════════════════════════════════════════════════
    # RUNS
    # ════════════════════════════════════════════════════════

    def _world(self, cfg: RunConfig, run_log: RunLog, local=None) -> World:
        return World(
            cfg.spec, cfg.consts, cfg.suite, cfg.sut,
            seconds_per_tick=cfg.seconds_per_tick,
            cycletime_override=cfg.cycletime,
            max_ticks=cfg.max_ticks,
            solver_effort=cfg.solver_effort,
            mutation_shuffle_seed=cfg.seed if cfg.stress else None,
            run_log=run_log,
            local=local,
        )

    def simulate(self, cfg: RunConfig) -> RunReport:
        """Run every instance in this process"""
        started = datetime.now()
        run_log = RunLog(cfg.start_time)
        world = self._world(cfg, run_log)
        world.run_to_end()
        self.last_world = world
        report = self._report(cfg, world, started, world.status, "local")
        report.instances = world.instance_summaries()
        self._store(cfg, world, report)
        return report

    def systest(self, cfg: RunConfig) -> RunReport:
        """
        Run the instances on agents coordinated over a transport.

        In inproc mode the agents are pumped by the coordinator, so a run is
        deterministic for a given seed; in udp mode each agent serves from its
        own thread.
        """
        started = datetime.now()
        run_log = RunLog(cfg.start_time)
        world = self._world(cfg, run_log, local=())
        self.last_world = world
        roster = cfg.roster or default_roster(world.runtimes, world.current)
        ok, reason = roster.validate(list(world.runtimes))
        if not ok:
            logger.error(f"Invalid roster: {reason}")
            report = self._report(cfg, world, started, RunStatus.ABORTED, cfg.mode)
            report.diagnostics.append(f"roster: {reason}")
            self._store(cfg, world, report, roster)
            return report

        stop = threading.Event()
        threads: List[threading.Thread] = []
        try:
            bus = open_bus(cfg.mode, cfg.loss, cfg.seed)
            agents = [Agent(entry, cfg.spec, cfg.consts, bus.endpoint(entry.agent_id), cfg.tick_ms,
                            cfg.solver_effort, world.graph) for entry in roster.hosting]
            if cfg.mode == "udp":
                coordinator = Coordinator(world, roster, bus, [], cfg.tick_ms, cfg.pace,
                                          cfg.silence_limit, cfg.start_timeout_s)
                for agent in agents:
                    thread = threading.Thread(target=agent.serve, args=(stop,), name=agent.id, daemon=True)
                    thread.start()
                    threads.append(thread)
            else:
                coordinator = Coordinator(world, roster, bus, agents, cfg.tick_ms, cfg.pace,
                                          cfg.silence_limit, cfg.start_timeout_s)
        except (TransportError, OSError, ValueError) as e:
            logger.error(f"Failed to set up transport: {e}")
            report = self._report(cfg, world, started, RunStatus.ABORTED, cfg.mode)
            report.diagnostics.append(f"transport: {e}")
            self._store(cfg, world, report, roster)
            return report

        try:
            coordinator.run()
        finally:
            stop.set()
            for thread in threads:
                thread.join(timeout=1.0)

        status = coordinator.verdicts.determine_status(coordinator.infrastructure_error)
        report = self._report(cfg, world, started, status, cfg.mode)
        report.instances = coordinator.instance_summaries()
        report.diagnostics.extend(coordinator.diagnostics)
        if coordinator.infrastructure_error:
            report.diagnostics.append(coordinator.infrastructure_error)
            report.diagnostics.append(f"roster: {json.dumps(roster.to_dict(), ensure_ascii=False)}")
        self._store(cfg, world, report, roster, coordinator.agent_reports)
        return report

    def run_experiment(self, experiment: Experiment, distributed: bool = False, **overrides) -> RunReport:
        """Reproduce an experiment; a setup problem yields an ABORTED report"""
        cfg, problems = self.config_for(experiment, **overrides)
        if cfg is None:
            report = RunReport(systemtest=experiment.id, status=RunStatus.ABORTED.value)
            report.experiment = experiment.id
            report.diagnostics.extend(problems)
            logger.error(f"Experiment {experiment.id} not runnable: {'; '.join(problems)}")
            return report
        logger.info(f"Running experiment {experiment.id} ({'distributed' if distributed else 'local'})")
        return self.systest(cfg) if distributed else self.simulate(cfg)

    @staticmethod
    def check_expectations(experiment: Experiment, report: RunReport) -> List[str]:
        """Differences between a report and the expected outcome of an experiment"""
        problems = []
        expected = experiment.expected
        if 'status' in expected and report.status != expected['status']:
            problems.append(f"status {report.status}, expected {expected['status']}")
        for instance_id, verdict in expected.get('verdicts', {}).items():
            actual = report.verdict_of(instance_id)
            if actual != verdict:
                problems.append(f"{instance_id}: {actual}, expected {verdict}")
        for fragment in expected.get('log', []):
            if not report.log_contains(fragment):
                problems.append(f"log line missing: {fragment}")
        for label, count in expected.get('frozen_reports', {}).items():
            actual = SystestManager.frozen_reports(report.log, label)
            if actual != count:
                problems.append(f"{label}: {actual} frozen position report(s), expected {count}")
        return problems

    @staticmethod
    def frozen_reports(log: List[str], label: str) -> int:
        """Identical position reports of a rover right after its GPS fault was injected"""
        marker = f"[GPS] Simulate fault for {label}"
        if marker not in log:
            return 0
        prefix = f"{label} Pos "
        reports = [line.split(prefix, 1)[1] for line in log[log.index(marker) + 1:] if prefix in line]
        count = 0
        for text in reports:
            if text != reports[0] or "(State: DEAD)" in text:
                break
            count += 1
        return count

    # ════════════════════════════════════════════════════════
    # REPORTING
    # ════════════════════════════════════════════════════════

    def _report(self, cfg: RunConfig, world: World, started: datetime, status: RunStatus, mode: str) -> RunReport:
        systemtest = cfg.spec.systemtest.name if cfg.spec.systemtest else ""
        report = RunReport(
            run_id=ArtifactStore.generate_run_id(systemtest, cfg.seed, started),
            systemtest=systemtest,
            spec_hash=spec_hash(cfg.spec),
            seed=cfg.seed,
            mode=mode,
            status=status.value
        )
        report.experiment = cfg.experiment
        report.started_at = started
        report.finished_at = datetime.now()
        report.ticks = world.tick
        report.t_hat = world.t_hat
        report.verdicts = list(world.verdicts.values())
        report.events = [dict(event, tick=event.get('tick', row.tick))
                         for row in world.trace for event in row.events]
        report.fault = world.fault
        report.log = list(world.run_log.lines)
        report.trace_laws = check_trace_laws(world.trace)
        logger.info(f"Run {report.run_id}: {report.status} "
                    f"({report.get_passed_count()} passed, {report.get_failed_count()} failed)")
        return report

    def _store(self, cfg: RunConfig, world: World, report: RunReport, roster: Optional[Roster] = None,
               agent_reports: Optional[Dict[str, Dict[str, Any]]] = None):
        if self.store is None:
            return
        try:
            run_path = self.store.create_run(report.run_id)
            report.run_id = run_path.name
            if cfg.suite is not None:
                self.store.write_suite(run_path, cfg.suite)
            self.store.write_trace(run_path, world.trace)
            self.store.write_log(run_path, report.log)
            for agent_id, data in (agent_reports or {}).items():
                self.store.write_agent_verdicts(run_path, agent_id, data)
            if roster is not None:
                self.store.write_agent_verdicts(run_path, "roster", {'agents': roster.to_dict()})
            self.store.write_report(run_path, report)
            self.last_run_dir = run_path
        except Exception as e:
            logger.error(f"Failed to store run artifacts: {e}")
