"""
Text Exporter
Renders run reports as plain text from a Jinja2 template
"""
from pathlib import Path
from typing import Optional

from jinja2 import Environment, FileSystemLoader, StrictUndefined

import config
from models.run_report import RunReport
from utils.logger import setup_logger

logger = setup_logger(__name__)

TEMPLATE_NAME = "run_report.txt.j2"


class TextExporter:
    """
    Plain-text rendering of a run report.

    Args:
        templates_dir: Directory holding run_report.txt.j2
    """

    def __init__(self, templates_dir: Optional[str] = None):
        self.env = Environment(
            loader=FileSystemLoader(templates_dir or config.TEMPLATES_DIR),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
            undefined=StrictUndefined,
        )
        logger.debug("TextExporter initialized")

    def render(self, report: RunReport, show_log: bool = False) -> str:
        return self.env.get_template(TEMPLATE_NAME).render(report=report, show_log=show_log)

    def export_report(self, report: RunReport, output_path: str, show_log: bool = True) -> bool:
        try:
            Path(output_path).parent.mkdir(parents=True, exist_ok=True)
            Path(output_path).write_text(self.render(report, show_log), encoding="utf-8")
            logger.info(f"Text report exported to: {output_path}")
            return True
        except Exception as e:
            logger.error(f"Failed to export text report: {e}")
            return False
