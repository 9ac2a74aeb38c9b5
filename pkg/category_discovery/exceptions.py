from __future__ import annotations

from typing import Optional


class InvalidParameter(ValueError):
    """Exception raised when a parameter violates an operation's precondition.

    The reason is given as the exception message.
    """
    pass

class MalformedInput(ValueError):
    """Exception raised when an input file cannot be parsed.

    Carries the offending path, the 1-based line number and the field name
    when they are known.
    """

    def __init__(
        self,
        reason: str,
        *,
        path: Optional[str] = None,
        line: Optional[int] = None,
        field: Optional[str] = None,
    ):
        self.reason = reason
        self.path = path
        self.line = line
        self.field = field
        super().__init__(self.full_text)

    @property
    def full_text(self) -> str:
        where = []
        if self.path is not None:
            where.append(str(self.path))
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field is not None:
            where.append(f"field '{self.field}'")
        if where:
            return f"{', '.join(where)}: {self.reason}"
        return self.reason

class DatasetIOError(OSError):
    """Exception raised when a file or directory can't be read or written."""

    def __init__(self, path: str, reason: str):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")

class ExitWithStatus(SystemExit):
   """Can be raised to leave the command line tool with a given exit status."""
   pass
