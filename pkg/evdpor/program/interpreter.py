"""
Program Interpreter
Deterministic, replayable interpreter whose scheduling unit is the message instance
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from evdpor.errors import ContractViolation, EvaluationError, ScheduleError
from evdpor.program.events import (
    BEGIN, LOCAL, AccessDescriptor, AccessKind, Event, ExecutionRecord, InstanceId, Violation,
)
from evdpor.program.model import (
    Assert, BinOp, Block, Cas, Const, Expr, If, Let, Load, Neg, Post, Program, Reg, Repeat,
    Statement, Store, is_global,
)

logger = logging.getLogger(__name__)

INT_MIN = -(2 ** 63)
INT_MAX = 2 ** 63 - 1


class Status(str, Enum):
    NOT_STARTED = "not-started"
    RUNNING = "running"
    FINISHED = "finished"


# (block, next statement index, remaining iterations of the block)
Frame = Tuple[Block, int, int]


@dataclass
class InstanceState:
    """Registers, control stack and counters of one thread or message instance"""
    status: Status
    frames: List[Frame]
    registers: Dict[str, int] = field(default_factory=dict)
    steps: int = 0
    posts: int = 0

    def copy(self) -> "InstanceState":
        return InstanceState(self.status, list(self.frames), dict(self.registers), self.steps, self.posts)


def _checked(value: int) -> int:
    if not INT_MIN <= value <= INT_MAX:
        raise EvaluationError(f"integer overflow: {value} does not fit in 64 bits")
    return value


def evaluate(expr: Expr, registers: Dict[str, int]) -> int:
    """Evaluate an expression over a register valuation; comparisons yield 1 or 0"""
    if isinstance(expr, Const):
        return _checked(expr.value)
    if isinstance(expr, Reg):
        try:
            return registers[expr.name]
        except KeyError:
            raise EvaluationError(f"register {expr.name!r} read before assignment")
    if isinstance(expr, Neg):
        return _checked(-evaluate(expr.operand, registers))
    left = evaluate(expr.left, registers)
    right = evaluate(expr.right, registers)
    op = expr.op
    if op == "+":
        return _checked(left + right)
    if op == "-":
        return _checked(left - right)
    if op == "*":
        return _checked(left * right)
    if op == "==":
        return int(left == right)
    if op == "!=":
        return int(left != right)
    if op == "<":
        return int(left < right)
    if op == "<=":
        return int(left <= right)
    if op == ">":
        return int(left > right)
    if op == ">=":
        return int(left >= right)
    raise EvaluationError(f"unknown operator {op!r}")


@dataclass
class MachineState:
    """Shared store, instance states, mailboxes and running messages

    Single-owner; `step` returns a fresh copy and leaves the input untouched.
    """
    program: Program
    shared: Dict[str, int]
    instances: Dict[InstanceId, InstanceState]
    mailboxes: Dict[str, Set[InstanceId]]
    running: Dict[str, Optional[InstanceId]]
    violations: List[Violation] = field(default_factory=list)

    def copy(self) -> "MachineState":
        return MachineState(
            self.program,
            dict(self.shared),
            {i: s.copy() for i, s in self.instances.items()},
            {h: set(m) for h, m in self.mailboxes.items()},
            dict(self.running),
            list(self.violations),
        )

    def status(self, instance: InstanceId) -> Optional[Status]:
        state = self.instances.get(instance)
        return state.status if state else None

    @property
    def is_maximal(self) -> bool:
        return not enabled(self)


def init_state(program: Program) -> MachineState:
    """Initial state: shared variables 0, mailboxes empty, every thread ready"""
    instances = {}
    for thread in program.threads:
        status = Status.RUNNING if thread.body else Status.FINISHED
        instances[InstanceId.thread(thread.name)] = InstanceState(status, [(thread.body, 0, 1)] if thread.body else [])
    return MachineState(
        program=program,
        shared={var: 0 for var in program.shared_vars},
        instances=instances,
        mailboxes={h: set() for h in program.handlers},
        running={h: None for h in program.handlers},
    )


def enabled(state: MachineState) -> FrozenSet[InstanceId]:
    """Instances that can perform a next event"""
    result = set()
    for instance, inst in state.instances.items():
        if instance.is_thread and inst.status is Status.RUNNING:
            result.add(instance)
    for handler, current in state.running.items():
        if current is not None:
            result.add(current)
        else:
            result.update(state.mailboxes[handler])
    return frozenset(result)


def _next_global(state: MachineState, instance: InstanceId, inst: InstanceState) -> Optional[Statement]:
    """Run local statements until a global statement is next; None at end of body"""
    frames = inst.frames
    while frames:
        block, index, remaining = frames[-1]
        if index >= len(block):
            frames.pop()
            if remaining > 1:
                frames.append((block, 0, remaining - 1))
            continue
        stmt = block[index]
        if is_global(stmt):
            return stmt
        frames[-1] = (block, index + 1, remaining)
        if isinstance(stmt, Let):
            inst.registers[stmt.reg] = evaluate(stmt.expr, inst.registers)
        elif isinstance(stmt, Assert):
            if not evaluate(stmt.cond, inst.registers):
                message = f"assertion failed at line {stmt.line}" if stmt.line else "assertion failed"
                state.violations.append(Violation(instance, message))
                logger.debug("%s: %s", instance, message)
        elif isinstance(stmt, If):
            branch = stmt.then if evaluate(stmt.cond, inst.registers) else stmt.orelse
            if branch:
                frames.append((branch, 0, 1))
        elif isinstance(stmt, Repeat):
            if stmt.count > 0 and stmt.body:
                frames.append((stmt.body, 0, stmt.count))
    return None


def _execute_global(state: MachineState, instance: InstanceId, inst: InstanceState, stmt: Statement) -> AccessDescriptor:
    block, index, remaining = inst.frames[-1]
    inst.frames[-1] = (block, index + 1, remaining)
    if isinstance(stmt, Store):
        state.shared[stmt.var] = evaluate(stmt.expr, inst.registers)
        return AccessDescriptor(AccessKind.WRITE, stmt.var)
    if isinstance(stmt, Load):
        inst.registers[stmt.reg] = state.shared[stmt.var]
        return AccessDescriptor(AccessKind.READ, stmt.var)
    if isinstance(stmt, Cas):
        old = state.shared[stmt.var]
        if old == evaluate(stmt.expected, inst.registers):
            state.shared[stmt.var] = evaluate(stmt.new, inst.registers)
        inst.registers[stmt.reg] = old
        return AccessDescriptor(AccessKind.RMW, stmt.var)
    assert isinstance(stmt, Post)
    inst.posts += 1
    target = instance.child(inst.posts, stmt.message, stmt.handler)
    body = state.program.messages[stmt.message]
    state.instances[target] = InstanceState(Status.NOT_STARTED, [(body, 0, 1)] if body else [])
    state.mailboxes[stmt.handler].add(target)
    return AccessDescriptor(AccessKind.POST, target=target)


def _finish(state: MachineState, instance: InstanceId, inst: InstanceState):
    inst.status = Status.FINISHED
    if not instance.is_thread:
        state.running[instance.handler] = None


def step(state: MachineState, instance: InstanceId) -> Tuple[MachineState, Event]:
    """Perform the next event of `instance`

    Selecting a mailbox-resident message starts it with its Begin event.
    Otherwise the instance runs up to and including one global action;
    local statements after it are run eagerly so the returned event knows
    whether it finished the instance.

    Raises:
        ContractViolation: instance is not enabled
    """
    if instance not in enabled(state):
        raise ContractViolation(f"instance {instance} is not enabled")
    state = state.copy()
    inst = state.instances[instance]
    inst.steps += 1

    if inst.status is Status.NOT_STARTED:
        handler = instance.handler
        state.mailboxes[handler].discard(instance)
        state.running[handler] = instance
        inst.status = Status.RUNNING
        return state, Event(instance, inst.steps, BEGIN)

    stmt = _next_global(state, instance, inst)
    if stmt is None:
        _finish(state, instance, inst)
        return state, Event(instance, inst.steps, LOCAL, final=True)
    access = _execute_global(state, instance, inst, stmt)
    final = _next_global(state, instance, inst) is None
    if final:
        _finish(state, instance, inst)
    return state, Event(instance, inst.steps, access, final=final)


def run(program: Program, schedule: Sequence[InstanceId]) -> ExecutionRecord:
    """Replay a schedule from the initial state

    Raises:
        ScheduleError: a scheduled instance was not enabled at its turn
    """
    record, _ = replay(program, schedule)
    return record


def replay(program: Program, schedule: Sequence[InstanceId]) -> Tuple[ExecutionRecord, MachineState]:
    """Like run(), also returning the final machine state"""
    state = init_state(program)
    events = []
    for position, instance in enumerate(schedule):
        if instance not in enabled(state):
            raise ScheduleError(position, instance)
        state, event = step(state, instance)
        events.append(event)
    return ExecutionRecord(tuple(events), tuple(state.violations)), state
