"""
RunReport Data Model
Outcome of one system test run: status, verdicts, events and the run log
"""
from datetime import datetime
from typing import Any, Dict, List, Optional

import config
from models.enums import RunStatus, Verdict


class RunReport:
    """
    Represents a finished (or aborted) system test run.

    Attributes:
        run_id: Unique identifier, also the run directory name
        systemtest: Name of the system test configuration
        spec_hash: Hash of the specification text
        seed: Seed of the run (transport loss, mutation order)
        mode: Transport mode (inproc or udp)
        status: Overall status (RunStatus value)
        ticks: Index of the final valuation
        t_hat: Logical time at the end of the run
        verdicts: Per-instance verdict records {instance, verdict, reason}
        instances: Per-instance summaries (lifecycle, monitors, activation ticks)
        events: Structural and lifecycle events of the trace
        fault: Fault record of an aborted run
        diagnostics: Liveness and infrastructure messages
        log: Run log lines
        trace_laws: Violations per trace law (empty lists when sound)
        experiment: Experiment id when the run reproduced one
    """

    def __init__(
        self,
        run_id: Optional[str] = None,
        systemtest: str = "",
        spec_hash: str = "",
        seed: int = 0,
        mode: str = "inproc",
        status: str = RunStatus.INCOMPLETE.value
    ):
        self.run_id = run_id or self._generate_run_id()
        self.systemtest = systemtest
        self.spec_hash = spec_hash
        self.seed = seed
        self.mode = mode
        self.status = status

        self.started_at: Optional[datetime] = None
        self.finished_at: Optional[datetime] = None

        self.ticks = 0
        self.t_hat = 0.0
        self.verdicts: List[Dict[str, Any]] = []
        self.instances: List[Dict[str, Any]] = []
        self.events: List[Dict[str, Any]] = []
        self.fault: Optional[Dict[str, Any]] = None
        self.diagnostics: List[str] = []
        self.log: List[str] = []
        self.trace_laws: Dict[str, List[str]] = {}
        self.experiment: Optional[str] = None

    def _generate_run_id(self) -> str:
        """Generate run ID based on timestamp"""
        return datetime.now().strftime(config.RUN_ID_FORMAT)

    @property
    def duration_seconds(self) -> Optional[float]:
        """Wall-clock duration of the run"""
        if self.started_at is None:
            return None
        end = self.finished_at or datetime.now()
        return round((end - self.started_at).total_seconds(), 3)

    @property
    def exit_code(self) -> int:
        return config.ExitCode.from_status(self.status)

    def get_passed_count(self) -> int:
        return sum(1 for v in self.verdicts if v['verdict'] == Verdict.PASS.value)

    def get_failed_count(self) -> int:
        return sum(1 for v in self.verdicts if v['verdict'] == Verdict.FAIL.value)

    def verdict_of(self, instance_id: str) -> Optional[str]:
        for record in self.verdicts:
            if record['instance'] == instance_id:
                return record['verdict']
        return None

    def log_contains(self, fragment: str) -> bool:
        return any(fragment in line for line in self.log)

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert report to dictionary for serialization.

        Returns:
            Dictionary representation of the report
        """
        return {
            'run_id': self.run_id,
            'systemtest': self.systemtest,
            'spec_hash': self.spec_hash,
            'seed': self.seed,
            'mode': self.mode,
            'status': self.status,
            'exit_code': self.exit_code,
            'experiment': self.experiment,
            'started_at': self.started_at.strftime(config.DATETIME_FORMAT) if self.started_at else None,
            'finished_at': self.finished_at.strftime(config.DATETIME_FORMAT) if self.finished_at else None,
            'duration_seconds': self.duration_seconds,
            'ticks': self.ticks,
            't_hat': self.t_hat,
            'passed': self.get_passed_count(),
            'failed': self.get_failed_count(),
            'verdicts': self.verdicts,
            'instances': self.instances,
            'events': self.events,
            'fault': self.fault,
            'diagnostics': self.diagnostics,
            'trace_laws': self.trace_laws,
            'log': self.log,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunReport':
        """
        Create report from dictionary.

        Args:
            data: Dictionary with report data

        Returns:
            RunReport instance
        """
        report = cls(
            run_id=data.get('run_id'),
            systemtest=data.get('systemtest', ''),
            spec_hash=data.get('spec_hash', ''),
            seed=data.get('seed', 0),
            mode=data.get('mode', 'inproc'),
            status=data.get('status', RunStatus.INCOMPLETE.value)
        )
        for key in ('started_at', 'finished_at'):
            if data.get(key):
                setattr(report, key, datetime.strptime(data[key], config.DATETIME_FORMAT))
        report.experiment = data.get('experiment')
        report.ticks = data.get('ticks', 0)
        report.t_hat = data.get('t_hat', 0.0)
        report.verdicts = list(data.get('verdicts', []))
        report.instances = list(data.get('instances', []))
        report.events = list(data.get('events', []))
        report.fault = data.get('fault')
        report.diagnostics = list(data.get('diagnostics', []))
        report.trace_laws = dict(data.get('trace_laws', {}))
        report.log = list(data.get('log', []))
        return report

    def __repr__(self):
        return f"RunReport({self.run_id!r}, {self.status}, {len(self.verdicts)} verdicts)"
