"""
Managers Package
Run-level bookkeeping: tick pacing, lifecycle checks and verdicts

SystestManager lives in managers.systest_manager and is imported from there;
it depends on the agents package, which itself uses the managers below.
"""
from managers.tick_manager import TickManager
from managers.schedule_manager import ScheduleManager
from managers.verdict_manager import VerdictManager

__all__ = [
    'TickManager',
    'ScheduleManager',
    'VerdictManager'
]
