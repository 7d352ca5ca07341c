"""
Exception hierarchy for btrv

Every error raised by the library derives from BtrvError so callers
(the CLI in particular) can map failures to exit codes in one place.
"""

from typing import Optional


class BtrvError(Exception):
    """Base class for all btrv errors"""


class ModelError(BtrvError):
    """Structural problem in a program graph or channel system"""


class ContractViolation(BtrvError):
    """A precondition of an engine operation was broken"""


class DomainError(BtrvError):
    """A value was assigned outside the variable's declared domain"""


class EvaluationError(BtrvError):
    """A guard or effect could not be evaluated (ill-typed operands)"""


class ModelSyntaxError(BtrvError):
    """Parse error in the program-graph text format"""

    def __init__(self, message: str, line: int = 0, column: int = 0, file: Optional[str] = None):
        self.message = message
        self.line = line
        self.column = column
        self.file = file
        where = f"{file}:" if file else ""
        super().__init__(f"{where}{line}:{column}: {message}")


class ScopeSyntaxError(BtrvError):
    """Parse or resolution error in a SCOPE property"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")


class BtCompileError(BtrvError):
    """Behavior tree definition cannot be compiled"""


class NotMonitorableError(BtrvError):
    """Formula falls outside the monitor synthesis patterns"""

    def __init__(self, subformula: str, reason: str, supported: Optional[list] = None):
        self.subformula = subformula
        self.reason = reason
        self.supported = supported or []
        text = f"not monitorable: {reason} (at: {subformula})"
        if self.supported:
            text += "; supported shapes: " + "; ".join(self.supported)
        super().__init__(text)


class AttachError(BtrvError):
    """Monitor refers to a channel the system does not have"""


class ScenarioBuildError(BtrvError):
    """Scenario configuration cannot be turned into a runnable system"""


class TraceFormatError(BtrvError):
    """Malformed trace file"""

    def __init__(self, message: str, line: int = 0):
        self.message = message
        self.line = line
        super().__init__(f"line {line}: {message}")
