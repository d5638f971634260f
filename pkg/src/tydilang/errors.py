"""Diagnostics and error types shared by all compiler stages."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Span:
    """Half-open byte range [start, end) into a source file."""

    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"invalid span: {self.start} > {self.end}")

    def __str__(self):
        return f"{self.start}-{self.end}"


@dataclass
class Diagnostic:
    """A single compiler message tied to a source location."""

    category: str  # syntax | resolution | type | assertion | drc | io | usage
    message: str
    path: Optional[str] = None
    span: Optional[Span] = None

    def location(self, source_text: Optional[str] = None) -> str:
        if self.path is None:
            return "<project>"
        if self.span is None or source_text is None:
            return self.path
        line, col = offset_to_line_col(source_text, self.span.start)
        return f"{self.path}:{line}:{col}"


class TydiError(Exception):
    """Raised for any unrecoverable condition in a compile stage."""

    def __init__(self, category: str, message: str, path: Optional[str] = None,
                 span: Optional[Span] = None):
        super().__init__(message)
        self.diagnostic = Diagnostic(category, message, path, span)

    @property
    def category(self) -> str:
        return self.diagnostic.category

    @property
    def message(self) -> str:
        return self.diagnostic.message


class SyntaxDiagnosticError(TydiError):
    def __init__(self, message, path=None, span=None):
        super().__init__("syntax", message, path, span)


class ResolutionError(TydiError):
    def __init__(self, message, path=None, span=None):
        super().__init__("resolution", message, path, span)


class TypeError_(TydiError):
    """Type rule violation; trailing underscore avoids shadowing the builtin."""

    def __init__(self, message, path=None, span=None):
        super().__init__("type", message, path, span)


class AssertionFailure(TydiError):
    def __init__(self, message, path=None, span=None):
        super().__init__("assertion", message, path, span)


class CircularDependencyError(TydiError):
    def __init__(self, members):
        cycle = " -> ".join(members)
        super().__init__("resolution", f"circular dependency: {cycle}")
        self.members = list(members)


def offset_to_line_col(text: str, offset: int) -> tuple[int, int]:
    """1-based (line, column) for a byte offset into UTF-8 encoded text."""
    data = text.encode("utf-8")[:offset]
    line = data.count(b"\n") + 1
    last_nl = data.rfind(b"\n")
    col_bytes = data[last_nl + 1:]
    return line, len(col_bytes.decode("utf-8", errors="replace")) + 1
