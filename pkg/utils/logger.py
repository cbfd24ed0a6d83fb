"""
Logging Configuration
Logger setup for the toolchain plus the run-log sink for test executions
"""
import logging
import sys
from datetime import datetime, timedelta
from typing import List, Optional

from config import LOG_LEVEL, LOG_FORMAT, RUN_LOG_TIME_FORMAT


def setup_logger(name: str, level: str = LOG_LEVEL) -> logging.Logger:
    """
    Setup and configure a logger.

    Args:
        name: Logger name (usually __name__ of the module)
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    # Avoid duplicate handlers if logger already exists
    if logger.handlers:
        return logger

    log_level = getattr(logging, level.upper(), logging.INFO)
    logger.setLevel(log_level)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(console_handler)

    return logger


class RunLog:
    """
    User-visible log of one test run.

    Lines are stamped with the run's logical start time plus t_hat, so two runs
    of the same suite and seed produce identical logs.

    Formats:
        [HH:MM:SS.mmm] [INFO] <message>     stamped()
        [<tag>] <message>                   tagged()
    """

    def __init__(self, start: Optional[datetime] = None, echo: bool = False):
        self.start = start or datetime(2000, 1, 1, 0, 0, 0)
        self.lines: List[str] = []
        self.echo = echo

    def timestamp(self, t_hat: float) -> str:
        moment = self.start + timedelta(seconds=float(t_hat))
        return f"{moment.strftime(RUN_LOG_TIME_FORMAT)}.{moment.microsecond // 1000:03d}"

    def stamped(self, t_hat: float, message: str, level: str = "INFO") -> str:
        return self._append(f"[{self.timestamp(t_hat)}] [{level}] {message}")

    def tagged(self, tag: str, message: str) -> str:
        return self._append(f"[{tag}] {message}")

    def extend(self, lines: List[str]):
        for line in lines:
            self._append(line)

    def _append(self, line: str) -> str:
        self.lines.append(line)
        if self.echo:
            print(line)
        return line

    def text(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")

