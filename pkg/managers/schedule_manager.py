"""
Schedule Manager
Checks instance lifecycle changes against the scheduling graph and records them
"""
from typing import Any, Dict, List, Mapping, Tuple

from engine.instances import Contribution
from engine.trace import TraceRow
from models.enums import Lifecycle
from testgen.scheduling import SchedulingGraph
from utils.logger import setup_logger

logger = setup_logger(__name__)

LIFECYCLE_EVENTS = ("runnable", "activated", "terminated", "discarded")


class ScheduleManager:
    """
    Manages lifecycle transitions of scheduled instances.

    Features:
    - Validation of activations reported by remote agents
    - Lifecycle history from trace events
    - Per-instance timeline (runnable, activated, terminated ticks)
    """

    def __init__(self, graph: SchedulingGraph):
        self.graph = graph
        self.history: List[Dict[str, Any]] = []
        logger.info("ScheduleManager initialized")

    def can_activate(self, instance_id: str, lifecycles: Mapping[str, Lifecycle]) -> Tuple[bool, str]:
        """
        Validate that an instance may become active.

        Args:
            instance_id: Scheduled instance id
            lifecycles: Current lifecycle of every instance

        Returns:
            (allowed: bool, reason: str)
        """
        if instance_id not in self.graph.nodes or self.graph.nodes[instance_id].virtual:
            return (False, f"unknown instance '{instance_id}'")
        state = lifecycles.get(instance_id)
        if state != Lifecycle.RUNNABLE:
            return (False, f"{instance_id} is {state.value if state else 'unknown'}, not runnable")
        for predecessor in self.graph.predecessors(instance_id):
            if self.graph.nodes[predecessor].virtual:
                continue
            if lifecycles.get(predecessor) != Lifecycle.TERMINATED:
                return (False, f"{instance_id} activated before {predecessor} terminated")
        return (True, "")

    def check_contribution(self, contribution: Contribution,
                           lifecycles: Mapping[str, Lifecycle]) -> Tuple[bool, str]:
        """(ok, reason) for a contribution received from an agent"""
        state = lifecycles.get(contribution.instance)
        if state is None:
            return (False, f"contribution for unknown instance '{contribution.instance}'")
        if state in (Lifecycle.PASSIVE, Lifecycle.TERMINATED):
            return (False, f"{contribution.instance} is {state.value} and cannot contribute")
        if contribution.activated:
            return self.can_activate(contribution.instance, lifecycles)
        return (True, "")

    def record_row(self, row: TraceRow):
        """Record the lifecycle events of one trace row"""
        for event in row.events:
            if event.get('kind') in LIFECYCLE_EVENTS:
                self.history.append({
                    'instance': event['instance'],
                    'kind': event['kind'],
                    'tick': event.get('tick', row.tick),
                })
                logger.debug(f"Lifecycle: {event['instance']} {event['kind']} at {row.tick}")

    def timeline(self, instance_id: str) -> Dict[str, int]:
        """First tick of each lifecycle event of one instance"""
        result: Dict[str, int] = {}
        for entry in self.history:
            if entry['instance'] == instance_id and entry['kind'] not in result:
                result[entry['kind']] = entry['tick']
        return result

    def get_history(self) -> List[Dict[str, Any]]:
        return list(self.history)

    def reset(self):
        self.history.clear()
