"""
Enums and Constants for the SCSL toolchain
"""
from enum import Enum


class Severity(Enum):
    """Severity of a static diagnostic"""
    ERROR = "error"
    WARNING = "warning"


class Verdict(Enum):
    """Outcome of a monitor"""
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"   # only while a trace segment is still open


class Direction(Enum):
    """Direction of an object parameter"""
    IN = "in"
    OUT = "out"


class Lifecycle(Enum):
    """Execution state of a scenario instance"""
    PASSIVE = "passive"         # not yet reachable in the schedule
    RUNNABLE = "runnable"       # waiting for its precondition
    ACTIVE = "active"
    TERMINATED = "terminated"   # left the active state (passive again, never re-run)


class FaultKind(Enum):
    """Runtime fault kinds raised by the evaluator and the engine"""
    ILLEGAL_SCHEDULE = "ILLEGAL-SCHEDULE"
    FRAME_VIOLATION = "FRAME-VIOLATION"
    UNBOUND_SYMBOL = "UNBOUND-SYMBOL"
    NULL_DEREFERENCE = "NULL-DEREFERENCE"
    DIVISION_BY_ZERO = "DIVISION-BY-ZERO"
    EMPTY_LIST = "EMPTY-LIST"
    EMPTY_SET = "EMPTY-SET"
    INDEX_RANGE = "INDEX-RANGE"
    TYPE_ERROR = "TYPE-ERROR"
    DANGLING_ENDPOINT = "DANGLING-ENDPOINT"


class AgentRole(Enum):
    """Role of an agent in a distributed run"""
    SUT = "SUT"
    ORACLE = "ORACLE"
    SIMULATION = "SIMULATION"
    EXECUTOR = "EXECUTOR"
    COORDINATOR = "COORDINATOR"
    EPM = "EPM"                 # emergent property monitor


class RunStatus(Enum):
    """Overall status of a system test run"""
    PASS = "PASS"
    FAIL = "FAIL"
    INCOMPLETE = "INCOMPLETE"   # tick budget exhausted before EoT
    ABORTED = "ABORTED"         # engine fault or infrastructure failure


class TransportMode(Enum):
    """How agents exchange state messages"""
    INPROC = "inproc"
    UDP = "udp"


class TickStatus(Enum):
    """Use of the tick period by one tick's work"""
    NORMAL = "normal"
    WARNING = "warning"         # most of the period used
    OVERTIME = "overtime"       # period exceeded (missed tick)
