"""
Program Package
Language model, parser and interpreter
"""

from evdpor.program.events import (
    AccessDescriptor, AccessKind, Event, ExecutionRecord, InstanceId, PostLabel, Violation,
)
from evdpor.program.interpreter import MachineState, enabled, init_state, replay, run, step
from evdpor.program.model import Program
from evdpor.program.parser import format_program, parse_program

__all__ = [
    "AccessDescriptor", "AccessKind", "Event", "ExecutionRecord", "InstanceId", "PostLabel",
    "Violation", "MachineState", "enabled", "init_state", "replay", "run", "step", "Program",
    "format_program", "parse_program",
]
