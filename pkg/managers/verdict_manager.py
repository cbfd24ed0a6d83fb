"""
Verdict Manager
Handles verdict recording, validation and the overall run status
"""
from typing import Any, Dict, List, Optional

from models.enums import RunStatus, Verdict
from utils.logger import setup_logger

logger = setup_logger(__name__)


class VerdictManager:
    """
    Manages final verdicts of a run.

    Features:
    - Validation of verdict records reported by agents
    - Liveness failures for silent agents
    - Status precedence ABORTED > FAIL > INCOMPLETE > PASS

    Args:
        world: World of the run; verdicts are registered through it so the
            run log receives the [<instance>-ORA] lines
    """

    def __init__(self, world):
        self.world = world
        self.rejected: List[str] = []
        self.liveness: List[str] = []
        logger.info("VerdictManager initialized")

    def validate_record(self, record: Any) -> bool:
        """
        Validate a verdict record against the run.

        Args:
            record: {instance, verdict, reason} as sent by an agent

        Returns:
            True if the record may be registered
        """
        if not isinstance(record, dict):
            return False
        instance_id = record.get('instance')
        if instance_id not in self.world.runtimes:
            return False
        # finalization on a finite trace never yields INCONCLUSIVE
        return record.get('verdict') in (Verdict.PASS.value, Verdict.FAIL.value)

    def save_verdict(self, record: Dict[str, Any]) -> Optional[Verdict]:
        """
        Register one verdict record.

        Returns:
            Verdict registered, None when the record was rejected
        """
        if not self.validate_record(record):
            self.rejected.append(str(record))
            logger.warning(f"Rejected verdict record: {record}")
            return None
        verdict = Verdict(record['verdict'])
        self.world.record_verdict(record['instance'], verdict, record.get('reason', ''))
        logger.info(f"Verdict saved for {record['instance']}: {verdict.value}")
        return verdict

    def save_all(self, records: List[Dict[str, Any]]):
        """Register records in scheduling order"""
        order = self.world.order
        for record in sorted(records, key=lambda r: order.get(r.get('instance'), len(order))
                             if isinstance(r, dict) else len(order)):
            self.save_verdict(record)

    def liveness_failure(self, agent_id: str, instances: List[str], silent_ticks: int, tick: int):
        """FAIL the instances of an agent that stopped answering"""
        message = f"liveness: agent {agent_id} silent for {silent_ticks} rounds at tick {tick}"
        self.liveness.append(message)
        logger.error(message)
        for instance_id in instances:
            if instance_id not in self.world.verdicts:
                self.world.record_verdict(instance_id, Verdict.FAIL, message)

    def determine_status(self, infrastructure_error: Optional[str] = None) -> RunStatus:
        if infrastructure_error:
            return RunStatus.ABORTED
        if self.liveness:
            return RunStatus.FAIL
        return self.world.status

    def get_passed_count(self) -> int:
        return sum(1 for v in self.world.verdicts.values() if v['verdict'] == Verdict.PASS.value)

    def get_failed_count(self) -> int:
        return sum(1 for v in self.world.verdicts.values() if v['verdict'] == Verdict.FAIL.value)
