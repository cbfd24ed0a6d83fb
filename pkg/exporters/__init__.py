"""
Exporters Package
Excel and text export of run reports
"""
from exporters.excel_exporter import ExcelExporter
from exporters.text_exporter import TextExporter

__all__ = ['ExcelExporter', 'TextExporter']
