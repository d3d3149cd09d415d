"""
Error types for dackrr
Every library failure maps to one class with a CLI exit code
"""

import json
from typing import Any, Dict


class DackrrError(Exception):
    """Base class for all dackrr errors"""

    exit_code = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = {k: v for k, v in context.items() if v is not None}

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.message} ({details})"

    def to_line(self) -> str:
        """Render the error as a single JSON line for stderr"""
        payload = {"error": type(self).__name__, "message": self.message}
        payload.update(self.context)
        return json.dumps(payload, default=str)


class InputError(DackrrError, ValueError):
    """Array shapes or lengths do not match"""

    exit_code = 2


class ParameterError(DackrrError, ValueError):
    """A parameter lies outside its admissible range"""

    exit_code = 2


class ParseError(DackrrError, ValueError):
    """A data file could not be parsed"""

    exit_code = 2

    def __init__(self, message: str, line: int = None, path: str = None):
        super().__init__(message, line=line, path=path)
        self.line = line


class ConfigError(DackrrError, ValueError):
    """Configuration file or flag values are invalid"""

    exit_code = 2


class NumericError(DackrrError, ArithmeticError):
    """A factorization or eigen-solver failed"""

    exit_code = 3

    def __init__(self, message: str, jitter: float = None, **context: Any):
        super().__init__(message, jitter=jitter, **context)
        self.jitter = jitter

    def annotate(self, **context: Any) -> "NumericError":
        """Return a copy of this error with extra context (partition, P, trial)"""
        merged = {k: v for k, v in self.context.items() if k != "jitter"}
        merged.update(context)
        return NumericError(self.message, jitter=self.jitter, **merged)


class UsageError(DackrrError, ValueError):
    """The command line could not be parsed"""

    exit_code = 2


class InternalError(DackrrError):
    """An unexpected exception escaped a command"""

    @classmethod
    def wrap(cls, error: BaseException) -> "InternalError":
        return cls(str(error) or type(error).__name__, type=type(error).__name__)
