"""
Source locations and diagnostics
"""
from dataclasses import dataclass, asdict
from typing import Any, Dict

from models.enums import Severity


@dataclass(frozen=True)
class SourceSpan:
    """Region of a source file (1-based lines and columns, end inclusive)"""
    file: str = "<input>"
    start_line: int = 1
    start_col: int = 1
    end_line: int = 1
    end_col: int = 1

    def __post_init__(self):
        if (self.end_line, self.end_col) < (self.start_line, self.start_col):
            raise ValueError("span end precedes span start")

    def to(self, other: "SourceSpan") -> "SourceSpan":
        """Span covering self through other"""
        return SourceSpan(self.file, self.start_line, self.start_col,
                          other.end_line, other.end_col)

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


NO_SPAN = SourceSpan()


@dataclass(frozen=True)
class Diagnostic:
    """A static problem found while parsing or typechecking"""
    severity: Severity
    message: str
    span: SourceSpan = NO_SPAN

    def __post_init__(self):
        if not self.message:
            raise ValueError("diagnostic message must be non-empty")

    @classmethod
    def error(cls, message: str, span: SourceSpan = NO_SPAN) -> "Diagnostic":
        return cls(Severity.ERROR, message, span)

    @classmethod
    def warning(cls, message: str, span: SourceSpan = NO_SPAN) -> "Diagnostic":
        return cls(Severity.WARNING, message, span)

    @property
    def is_error(self) -> bool:
        return self.severity == Severity.ERROR

    def to_dict(self) -> Dict[str, Any]:
        return {'severity': self.severity.value, 'message': self.message, 'span': asdict(self.span)}

    def __str__(self) -> str:
        return f"{self.span}: {self.severity.value}: {self.message}"
