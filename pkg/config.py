import os
import sys
from pathlib import Path
def _resolve_path(relative_path: str) -> str:
    """Resolve relative path for bundled read-only data (specs, fixtures, templates)"""
    if getattr(sys, 'frozen', False):
        base = Path(sys._MEIPASS)
        if (base / relative_path).exists():
            return str(base / relative_path)
        return str(Path(sys.executable).parent / relative_path)
    else:
        # Development mode - __file__ is config.py in project root
        return str(Path(__file__).parent / relative_path)
def _get_writable_path(relative_path: str) -> str:
    """Get writable path (always in executable/project directory)"""
    if getattr(sys, 'frozen', False):
        return str(Path(sys.executable).parent / relative_path)
    else:
        return str(Path(__file__).parent / relative_path)


SETTINGS_FILE = _get_writable_path("app_settings.json")
DEFAULT_STORE_ROOT = _get_writable_path("store")


# ============================================================================
# BUNDLED DATA
# ============================================================================

DATA_DIR = _resolve_path("data")
ROVER_SPEC_FILE = _resolve_path("data/rover.scsl")
FIGURE_SPEC_FILE = _resolve_path("data/figure_automaton.scsl")
INIT_SUITE_FILE = _resolve_path("data/init_suite.json")
EXPERIMENTS_FILE = _resolve_path("data/experiments.json")
TEMPLATES_DIR = _resolve_path("exporters/templates")


# ============================================================================
# EXIT CODES
# ============================================================================

class ExitCode:
    """Stable process exit codes of the scsl command"""
    PASS = 0            # all verdicts PASS
    FAIL = 1            # any verdict FAIL (or diagnostics for `check`)
    USAGE = 2           # usage error, missing file, spec error
    INFRASTRUCTURE = 3  # agent unreachable, transport failure, engine abort

    @classmethod
    def from_status(cls, status: str) -> int:
        """Map a run status string to an exit code"""
        if status == "PASS":
            return cls.PASS
        if status in ("FAIL", "INCOMPLETE"):
            return cls.FAIL
        return cls.INFRASTRUCTURE


# ============================================================================
# SEMANTICS DEFAULTS
# ============================================================================

EPSILON_CLOSE = 1.0          # isCloseTo threshold (grid units), overridable by const `epsilon`
SECONDS_PER_TICK = 0.1       # t_hat advance per observation tick
DEFAULT_MAX_TICKS = 2000

# Built-in symbols
SYMBOL_EOT = "EoT"
SYMBOL_TIME = "t_hat"
SYMBOL_ACTIVE = "active"
SYMBOL_FRAME = "frame"
STIM_PREFIX = "stim."


# ============================================================================
# TEST GENERATION
# ============================================================================

INT_DOMAIN = (-1024, 1024)   # default integer search domain of the solver
REAL_DOMAIN = (-1024.0, 1024.0)
DEFAULT_MAX_PATHS = 64
DEFAULT_MAX_DEPTH = 12
DEFAULT_MAX_CASES = 256
DEFAULT_SOLVER_EFFORT = 200000   # candidate assignments per guard
EXACT_GUARD_ATOMS = 8            # guards over more atoms skip minterm minimization
GENERATION_SOFT_BOUND_S = 2.0    # per-scenario artifact build time, warning only


# ============================================================================
# DISTRIBUTED RUNTIME
# ============================================================================

ENV_MCAST_ADDR = "SCSL_MCAST_ADDR"
ENV_MCAST_PORT = "SCSL_MCAST_PORT"
ENV_TICK_MS = "SCSL_TICK_MS"
ENV_LOG_LEVEL = "SCSL_LOG_LEVEL"

MCAST_ADDR = os.environ.get(ENV_MCAST_ADDR, "239.255.42.99")
MCAST_PORT = int(os.environ.get(ENV_MCAST_PORT, "47000"))
DEFAULT_TICK_MS = int(os.environ.get(ENV_TICK_MS, "20"))

MAX_DATAGRAM = 8192          # bytes per JSON datagram
RESEND_INTERVAL_S = 0.02     # coordinator re-request period
SILENCE_LIMIT_TICKS = 50     # ticks without a reply before liveness FAIL
START_TIMEOUT_S = 5.0


# ============================================================================
# LOGGING
# ============================================================================

LOG_LEVEL = os.environ.get(ENV_LOG_LEVEL, "INFO")
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
RUN_LOG_TIME_FORMAT = "%H:%M:%S"


# ============================================================================
# DATE/TIME FORMATS
# ============================================================================

DATETIME_FORMAT = "%d/%m/%Y %H:%M:%S"
RUN_ID_FORMAT = "%Y%m%d-%H%M%S"


# ============================================================================
# TICK PACING
# ============================================================================

TICK_WARNING_THRESHOLD = 75    # percent of the period used before WARNING
