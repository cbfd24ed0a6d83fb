# -*- coding: utf-8 -*-

"""
Excel Exporter
Writes system test run reports as colour-coded workbooks.

Sheets:
- Summary: run identification, timing and overall status
- Verdicts: one row per scenario instance with lifecycle and verdict
- Run Log: the user-visible run log
"""
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter
from openpyxl.worksheet.worksheet import Worksheet

from models.enums import RunStatus, Verdict
from models.run_report import RunReport
import config
from utils.logger import setup_logger

logger = setup_logger(__name__)


def _solid(rgb: str) -> PatternFill:
    return PatternFill(start_color=rgb, end_color=rgb, fill_type="solid")


_EDGE = Side(style='thin')
GRID = Border(left=_EDGE, right=_EDGE, top=_EDGE, bottom=_EDGE)
CENTER = Alignment(horizontal='center', vertical='center')

TITLE_FONT = Font(size=15, bold=True, color="0d47a1")
BAND_FONT = Font(color="FFFFFF", bold=True, size=11)
BAND_FILL = _solid("1565c0")
COLUMN_FONT = Font(color="FFFFFF", bold=True)
COLUMN_FILL = _solid("0d47a1")
LABEL_FONT = Font(bold=True)
NOTICE_FILL = _solid("FFF8E1")
NEUTRAL_FILL = _solid("ECEFF1")

VERDICT_FILLS: Dict[str, PatternFill] = {
    Verdict.PASS.value: _solid("DCEDC8"),
    Verdict.FAIL.value: _solid("FFCCBC"),
}
STATUS_FILLS: Dict[str, PatternFill] = {
    RunStatus.PASS.value: VERDICT_FILLS[Verdict.PASS.value],
    RunStatus.FAIL.value: VERDICT_FILLS[Verdict.FAIL.value],
    RunStatus.INCOMPLETE.value: NOTICE_FILL,
}

VERDICT_COLUMNS = ["Instance", "Scenario", "Role", "Lifecycle", "Activated", "Terminated", "Verdict", "Reason"]
SUMMARY_WIDTH = 7   # columns spanned by merged summary rows
MAX_COLUMN_WIDTH = 50
LOG_COLUMN_WIDTH = 100


class ExcelExporter:
    """
    Writes run reports to Excel.

    Features:
    - Run metadata (system test, spec hash, seed, transport)
    - Per-instance verdicts with colour-coded status
    - Diagnostics and trace law violations
    """

    def __init__(self):
        logger.info("ExcelExporter initialized")

    def export_report(self, report: RunReport, output_path: str) -> bool:
        """
        Write the workbook of one run.

        Args:
            report: RunReport to export
            output_path: Target .xlsx path (parent directories are created)

        Returns:
            True on success, False otherwise
        """
        try:
            wb = Workbook()
            summary = wb.active
            summary.title = "Summary"
            self._fill_summary(summary, report)

            verdicts = wb.create_sheet("Verdicts")
            self._fill_verdicts(verdicts, report)

            log = wb.create_sheet("Run Log")
            for number, line in enumerate(report.log, start=1):
                log.cell(row=number, column=1, value=line)
            log.column_dimensions['A'].width = LOG_COLUMN_WIDTH

            Path(output_path).parent.mkdir(parents=True, exist_ok=True)
            wb.save(output_path)
            logger.info(f"Workbook written to {output_path}")
            return True
        except Exception as e:
            logger.error(f"Failed to export Excel file: {e}")
            return False

    # ════════════════════════════════════════════════════════
    # SHEETS
    # ════════════════════════════════════════════════════════

    def _fill_summary(self, ws: Worksheet, report: RunReport):
        row = self._merged(ws, 1, "SYSTEM TEST REPORT", font=TITLE_FONT, alignment=CENTER, border=False) + 1

        row = self._band(ws, row, "RUN")
        for label, value in self._run_fields(report):
            if value:
                row = self._field(ws, row, label, value)

        row = self._band(ws, row + 1, "OUTCOME")
        for label, value in self._outcome_fields(report):
            row = self._field(ws, row, label, value)
        row = self._field(ws, row, "Status:", report.status, STATUS_FILLS.get(report.status, NEUTRAL_FILL))

        notes = self._notes(report)
        if notes:
            row = self._band(ws, row + 1, "DIAGNOSTICS")
            for note in notes:
                row = self._merged(ws, row, note, fill=NOTICE_FILL)
        self._fit_columns(ws)

    def _fill_verdicts(self, ws: Worksheet, report: RunReport):
        row = self._band(ws, 1, "VERDICTS", span=len(VERDICT_COLUMNS))
        for column, title in enumerate(VERDICT_COLUMNS, start=1):
            self._style(ws.cell(row=row, column=column, value=title), font=COLUMN_FONT, fill=COLUMN_FILL,
                        alignment=CENTER)
        for entry in report.instances:
            row += 1
            verdict = entry.get('verdict')
            values = [
                entry.get('id'),
                entry.get('scenario'),
                entry.get('role'),
                entry.get('lifecycle'),
                _tick(entry.get('activated_at')),
                _tick(entry.get('terminated_at')),
                verdict or "---",
                entry.get('reason') or "",
            ]
            for column, value in enumerate(values, start=1):
                centered = VERDICT_COLUMNS[column - 1] in ("Lifecycle", "Activated", "Terminated", "Verdict")
                self._style(ws.cell(row=row, column=column, value=value),
                            alignment=Alignment(horizontal='center') if centered else None)
            ws.cell(row=row, column=VERDICT_COLUMNS.index("Verdict") + 1).fill = \
                VERDICT_FILLS.get(verdict, NEUTRAL_FILL)
        self._fit_columns(ws)

    @staticmethod
    def _run_fields(report: RunReport) -> List[Tuple[str, Any]]:
        return [
            ("Run ID:", report.run_id),
            ("System test:", report.systemtest),
            ("Experiment:", report.experiment),
            ("Spec hash:", report.spec_hash),
            ("Seed:", str(report.seed)),
            ("Transport:", report.mode),
        ]

    @staticmethod
    def _outcome_fields(report: RunReport) -> List[Tuple[str, str]]:
        def stamp(moment: Optional[datetime]) -> str:
            return moment.strftime(config.DATETIME_FORMAT) if moment else "---"

        duration = report.duration_seconds
        return [
            ("Started:", stamp(report.started_at)),
            ("Finished:", stamp(report.finished_at)),
            ("Duration:", "---" if duration is None else f"{duration:.3f} s"),
            ("Ticks:", str(report.ticks)),
            ("t_hat:", f"{report.t_hat:g} s"),
            ("Passed:", str(report.get_passed_count())),
            ("Failed:", str(report.get_failed_count())),
        ]

    @staticmethod
    def _notes(report: RunReport) -> List[str]:
        notes = []
        if report.fault:
            notes.append(f"{report.fault.get('kind')}: {report.fault.get('message')}")
        notes.extend(report.diagnostics)
        for law, violations in report.trace_laws.items():
            notes.extend(f"{law}: {v}" for v in violations)
        return notes

    # ════════════════════════════════════════════════════════
    # CELLS
    # ════════════════════════════════════════════════════════

    @staticmethod
    def _style(cell, font: Optional[Font] = None, fill: Optional[PatternFill] = None,
               alignment: Optional[Alignment] = None, border: bool = True):
        if font is not None:
            cell.font = font
        if fill is not None:
            cell.fill = fill
        if alignment is not None:
            cell.alignment = alignment
        if border:
            cell.border = GRID
        return cell

    def _merged(self, ws: Worksheet, row: int, value: Any, first_column: int = 1,
                span: int = SUMMARY_WIDTH, **style) -> int:
        """Write value into a merged row segment; returns the next row"""
        last = get_column_letter(first_column + span - 1)
        ws.merge_cells(f"{get_column_letter(first_column)}{row}:{last}{row}")
        self._style(ws.cell(row=row, column=first_column, value=value), **style)
        return row + 1

    def _band(self, ws: Worksheet, row: int, title: str, span: int = SUMMARY_WIDTH) -> int:
        return self._merged(ws, row, title, span=span, font=BAND_FONT, fill=BAND_FILL,
                            alignment=Alignment(horizontal='left', vertical='center'))

    def _field(self, ws: Worksheet, row: int, label: str, value: Any,
               fill: Optional[PatternFill] = None) -> int:
        self._style(ws.cell(row=row, column=1, value=label), font=LABEL_FONT)
        return self._merged(ws, row, value, first_column=2, span=SUMMARY_WIDTH - 1, fill=fill,
                            font=LABEL_FONT if fill is not None else None)

    @staticmethod
    def _fit_columns(ws: Worksheet):
        widths: Dict[str, int] = {}
        for cells in ws.iter_rows():
            for cell in cells:
                if cell.value is not None and hasattr(cell, "column_letter"):
                    letter = cell.column_letter
                    widths[letter] = max(widths.get(letter, 0), len(str(cell.value)))
        for letter, width in widths.items():
            ws.column_dimensions[letter].width = min(width + 2, MAX_COLUMN_WIDTH)

    def generate_filename(self, report: RunReport, output_dir: str) -> str:
        """
        Workbook path for a report inside output_dir.

        Format: SystemTestReport_<DATE>_<RUN-ID>.xlsx
        """
        stamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        run_id = _safe_name(report.run_id) or "unknown"
        return str(Path(output_dir) / f"SystemTestReport_{stamp}_{run_id}.xlsx")


def _tick(value: Optional[int]) -> str:
    return "---" if value is None else str(value)


def _safe_name(text: Iterable[str]) -> str:
    return ''.join(c if c.isalnum() or c in '-_' else '_' for c in text)
