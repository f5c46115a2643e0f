"""
Program Model
Statements, expressions and declarations of the event-driven language
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple, Union


# Expressions

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Reg:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


Expr = Union[Const, Reg, BinOp, Neg]

ARITHMETIC_OPS = ("+", "-", "*")
COMPARISON_OPS = ("==", "!=", "<=", ">=", "<", ">")


# Statements; `line` only feeds error messages

@dataclass(frozen=True)
class Store:
    var: str
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Load:
    reg: str
    var: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Cas:
    """Compare-and-swap; `reg` receives the value read"""
    var: str
    expected: Expr
    new: Expr
    reg: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Post:
    message: str
    handler: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Let:
    reg: str
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Tuple["Statement", ...]
    orelse: Tuple["Statement", ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Repeat:
    count: int
    body: Tuple["Statement", ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assert:
    cond: Expr
    line: int = field(default=0, compare=False)


Statement = Union[Store, Load, Cas, Post, Let, If, Repeat, Assert]
Block = Tuple[Statement, ...]

GLOBAL_STATEMENTS = (Store, Load, Cas, Post)


def is_global(stmt: Statement) -> bool:
    """True for statements that perform a shared access or a post"""
    return isinstance(stmt, GLOBAL_STATEMENTS)


@dataclass(frozen=True)
class ThreadDecl:
    name: str
    body: Block


@dataclass(frozen=True)
class Program:
    """Static description of threads, handlers and message bodies

    All declared threads are spawned by an implicit main thread and every
    shared variable starts at 0.
    """
    shared_vars: Tuple[str, ...] = ()
    handlers: Tuple[str, ...] = ()
    threads: Tuple[ThreadDecl, ...] = ()
    messages: Dict[str, Block] = field(default_factory=dict)

    def thread_body(self, name: str) -> Block:
        for thread in self.threads:
            if thread.name == name:
                return thread.body
        raise KeyError(name)

    def body_of(self, instance) -> Block:
        """Body executed by an InstanceId"""
        if instance.is_thread:
            return self.thread_body(instance.root)
        return self.messages[instance.name]
