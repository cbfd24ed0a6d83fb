"""
Tick Manager
Handles pacing and overrun accounting of observation ticks
"""
import time
from typing import Callable, Dict, Optional

import config
from models.enums import TickStatus
from utils.logger import setup_logger

logger = setup_logger(__name__)


class TickManager:
    """
    Manages the wall-clock side of logical ticks.

    Features:
    - Shared start time and tick period
    - Per-tick elapsed time tracking
    - Overrun (missed tick) counting
    - Optional pacing: wait for the end of the tick slot

    Args:
        period_ms: Tick period in milliseconds
        pace: Sleep until the end of each tick slot
        clock: Monotonic clock in seconds (injectable for tests)
        sleep: Sleep function (injectable for tests)
    """

    def __init__(self, period_ms: int = config.DEFAULT_TICK_MS, pace: bool = False,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        if period_ms <= 0:
            raise ValueError("tick period must be positive")
        self.period_s = period_ms / 1000.0
        self.pace = pace
        self.clock = clock
        self.sleep = sleep

        self.start_time: Optional[float] = None
        self.tick_started: Dict[int, float] = {}
        self.tick_elapsed: Dict[int, float] = {}
        self.active_tick: Optional[int] = None
        self.missed_ticks = 0

        logger.info(f"TickManager initialized (period {period_ms} ms, pacing {'on' if pace else 'off'})")

    def start(self, start_time: Optional[float] = None):
        """Fix the shared start time (now by default)"""
        self.start_time = self.clock() if start_time is None else start_time
        self.tick_started.clear()
        self.tick_elapsed.clear()
        self.active_tick = None
        self.missed_ticks = 0

    def slot_start(self, tick: int) -> float:
        """Wall-clock start of a tick slot"""
        if self.start_time is None:
            self.start()
        return self.start_time + tick * self.period_s

    def begin_tick(self, tick: int):
        if self.start_time is None:
            self.start()
        self.tick_started[tick] = self.clock()
        self.active_tick = tick

    def end_tick(self, tick: int) -> TickStatus:
        """
        Close a tick.

        Returns:
            TickStatus of the tick's work; OVERTIME counts as a missed tick
        """
        started = self.tick_started.get(tick)
        if started is None:
            return TickStatus.NORMAL
        elapsed = self.clock() - started
        self.tick_elapsed[tick] = elapsed
        if self.active_tick == tick:
            self.active_tick = None

        status = self.get_tick_status(tick)
        if status == TickStatus.OVERTIME:
            self.missed_ticks += 1
            logger.warning(f"Tick {tick} overran its period ({elapsed * 1000:.1f} ms)")
        elif self.pace:
            remaining = self.slot_start(tick + 1) - self.clock()
            if remaining > 0:
                self.sleep(remaining)
        return status

    def get_elapsed_time(self, tick: int) -> float:
        """Seconds spent in a tick (running ticks: so far)"""
        if tick in self.tick_elapsed:
            return self.tick_elapsed[tick]
        if tick in self.tick_started:
            return self.clock() - self.tick_started[tick]
        return 0.0

    def get_remaining_time(self, tick: int) -> float:
        """Seconds left in the period (negative if overtime)"""
        return self.period_s - self.get_elapsed_time(tick)

    def get_tick_status(self, tick: int) -> TickStatus:
        if tick not in self.tick_started:
            return TickStatus.NORMAL
        remaining = self.get_remaining_time(tick)
        if remaining < 0:
            return TickStatus.OVERTIME
        used = 100.0 - remaining / self.period_s * 100.0
        return TickStatus.WARNING if used > config.TICK_WARNING_THRESHOLD else TickStatus.NORMAL

    def reset(self):
        self.start_time = None
        self.tick_started.clear()
        self.tick_elapsed.clear()
        self.active_tick = None
        self.missed_ticks = 0
        logger.info("TickManager reset")
