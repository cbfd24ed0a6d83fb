"""
Models Package
Data structures of the SCSL toolchain
"""
from models.enums import Severity, Verdict, Direction, Lifecycle, FaultKind, AgentRole, RunStatus
from models.source import SourceSpan, Diagnostic
from models.specification import Specification
from models.test_suite import TestStep, TestCase, TestSuite

__all__ = [
    'Severity',
    'Verdict',
    'Direction',
    'Lifecycle',
    'FaultKind',
    'AgentRole',
    'RunStatus',
    'SourceSpan',
    'Diagnostic',
    'Specification',
    'TestStep',
    'TestCase',
    'TestSuite'
]
