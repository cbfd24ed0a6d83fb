"""
Artifact Store
Writes the artifacts of each run under store/<run-id>/
Store root persists between invocations
"""
import json
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from engine.trace import Trace
from models.run_report import RunReport
from models.test_suite import TestSuite
from testgen.suite_io import write_suite
from utils.logger import setup_logger
from utils.settings_manager import SettingsManager

logger = setup_logger(__name__)

REPORT_FILE = "report.json"
SUITE_FILE = "suite.json"
TRACE_FILE = "trace.ndjson"
LOG_DIR = "logs"
VERDICT_DIR = "verdicts"


class ArtifactStore:
    """
    Handles the on-disk layout of run artifacts.

    Layout:
        <root>/<run-id>/suite.json
        <root>/<run-id>/report.json        (overwritten as the run progresses)
        <root>/<run-id>/trace.ndjson
        <root>/<run-id>/logs/run.log       (plus one log per agent)
        <root>/<run-id>/verdicts/<agent>.json

    Args:
        root: Store root; defaults to the persisted setting
    """

    def __init__(self, root: Optional[str] = None, settings: Optional[SettingsManager] = None):
        if root is None:
            root = (settings or SettingsManager()).get_store_root()
        self.root = str(root)
        os.makedirs(self.root, exist_ok=True)
        logger.info(f"ArtifactStore initialized with root: {self.root}")

    # ════════════════════════════════════════════════════════
    # RUN DIRECTORIES
    # ════════════════════════════════════════════════════════

    @staticmethod
    def generate_run_id(systemtest: str, seed: int = 0, moment: Optional[datetime] = None) -> str:
        """
        Generate a run id from date, system test name and seed.

        Format: <YYYYmmdd-HHMMSS>_<SYSTEMTEST>_s<SEED>
        Example: 20260203-101500_RoverSalvage_s7
        """
        stamp = (moment or datetime.now()).strftime("%Y%m%d-%H%M%S")
        clean = "".join(c for c in systemtest if c.isalnum() or c in "-_") or "run"
        return f"{stamp}_{clean}_s{seed}"

    def run_dir(self, run_id: str) -> Path:
        return Path(self.root) / run_id

    def create_run(self, run_id: str) -> Path:
        """
        Create the directory of a run.

        A second run with the same id gets a numeric suffix
        (<run-id>_2, <run-id>_3, ...).

        Returns:
            Path of the run directory
        """
        path = self.run_dir(run_id)
        k = 2
        while path.exists():
            path = self.run_dir(f"{run_id}_{k}")
            k += 1
        (path / LOG_DIR).mkdir(parents=True)
        (path / VERDICT_DIR).mkdir()
        logger.info(f"Run directory created: {path}")
        return path

    def list_runs(self) -> List[str]:
        """Run ids present in the store, oldest first"""
        root = Path(self.root)
        if not root.exists():
            return []
        return sorted(p.name for p in root.iterdir() if (p / REPORT_FILE).exists())

    # ════════════════════════════════════════════════════════
    # WRITERS
    # ════════════════════════════════════════════════════════

    def write_suite(self, run_path: Path, suite: TestSuite) -> bool:
        return write_suite(suite, str(Path(run_path) / SUITE_FILE))

    def write_report(self, run_path: Path, report: RunReport) -> bool:
        """
        Write the run report (overwriting).

        Returns:
            True if write successful
        """
        data = report.to_dict()
        data['last_updated'] = datetime.now().isoformat()
        data['file_version'] = '1.0'
        return self._write_json(Path(run_path) / REPORT_FILE, data)

    def write_log(self, run_path: Path, lines: Iterable[str], name: str = "run") -> bool:
        path = Path(run_path) / LOG_DIR / f"{name}.log"
        try:
            text = "\n".join(lines)
            path.write_text(text + "\n" if text else "", encoding="utf-8")
            logger.debug(f"Log written to {path}")
            return True
        except Exception as e:
            logger.error(f"Failed to write log {path}: {e}")
            return False

    def write_trace(self, run_path: Path, trace: Trace) -> bool:
        return trace.write(str(Path(run_path) / TRACE_FILE))

    def write_agent_verdicts(self, run_path: Path, agent_id: str, data: Dict[str, Any]) -> bool:
        return self._write_json(Path(run_path) / VERDICT_DIR / f"{agent_id}.json", data)

    def _write_json(self, path: Path, data: Any) -> bool:
        try:
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(data, f, indent=2, ensure_ascii=False)
            logger.debug(f"Data written to {path}")
            return True
        except Exception as e:
            logger.error(f"Failed to write {path}: {e}")
            return False

    # ════════════════════════════════════════════════════════
    # READERS
    # ════════════════════════════════════════════════════════

    def load_report(self, run: str) -> Optional[RunReport]:
        """
        Load the report of a run.

        Args:
            run: Run id inside the store, a run directory or a report.json path
        """
        candidates = [Path(run), Path(run) / REPORT_FILE, self.run_dir(run) / REPORT_FILE]
        for path in candidates:
            if path.is_file():
                try:
                    with open(path, 'r', encoding='utf-8') as f:
                        return RunReport.from_dict(json.load(f))
                except Exception as e:
                    logger.error(f"Failed to load report {path}: {e}")
                    return None
        logger.warning(f"No report found for {run}")
        return None
