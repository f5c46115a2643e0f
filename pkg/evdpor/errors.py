"""
evdpor Errors
Exception hierarchy shared by the interpreter, the explorer and the CLI
"""

from typing import Optional


class EvdporError(Exception):
    """Base class for every error raised by evdpor"""


class ProgramError(EvdporError):
    """Problem with a program text or a program declaration"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class ParseError(ProgramError):
    """Syntax error in program text"""


class UndeclaredIdentifierError(ProgramError):
    """Reference to a variable, handler or message that was never declared"""


class UnassignedRegisterError(ProgramError):
    """Register read on a path where nothing has assigned it"""


class EvaluationError(EvdporError):
    """Runtime error while evaluating an expression (overflow, unset register in a hand-built program)"""


class ScheduleError(EvdporError):
    """A schedule selected an instance that was not enabled at its turn"""

    def __init__(self, position: int, instance: object, reason: str = "not enabled"):
        self.position = position
        self.instance = instance
        super().__init__(f"schedule position {position}: instance {instance} is {reason}")


class ContractViolation(EvdporError):
    """An API was called outside its precondition"""


class CapExceededError(EvdporError):
    """Exploration hit the configured execution cap"""


class GraphFormatError(EvdporError):
    """Malformed consistency graph"""


class UnknownBenchmarkError(EvdporError):
    """No builtin program with the requested name"""


class BenchmarkParameterError(EvdporError):
    """Builtin program parameter missing or out of range"""
