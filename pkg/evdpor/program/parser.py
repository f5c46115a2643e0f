"""
Program Parser
Tokenizer, recursive-descent parser and pretty-printer for program text
"""

import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional

from evdpor.errors import ParseError, ProgramError, UnassignedRegisterError, UndeclaredIdentifierError
from evdpor.program.model import (
    ARITHMETIC_OPS, Assert, BinOp, Block, Cas, COMPARISON_OPS, Const, Expr, If, Let,
    Load, Neg, Post, Program, Reg, Repeat, Statement, Store, ThreadDecl,
)

DECLARATION_KEYWORDS = {"shared", "handler", "thread", "message"}
STATEMENT_KEYWORDS = {"store", "load", "cas", "post", "let", "if", "repeat", "assert"}
KEYWORDS = DECLARATION_KEYWORDS | STATEMENT_KEYWORDS | {"else"}

TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<symbol>->|==|!=|<=|>=|[{}()=<>+\-*])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    """Split program text into tokens, dropping blanks and comments"""
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, match.group(), line, pos - line_start + 1))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    """Recursive-descent parser over a token list"""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.shared: List[str] = []
        self.handlers: List[str] = []
        self.threads: List[ThreadDecl] = []
        self.messages: Dict[str, Block] = {}
        # (message, handler, token) of every post, checked after all declarations are read
        self.posts: List[tuple] = []
        self.var_refs: List[tuple] = []

    # Token helpers

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.current
        return ParseError(message, token.line, token.column)

    def expect(self, text: str) -> Token:
        if self.current.text != text or self.current.kind == "eof":
            found = self.current.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_name(self, what: str) -> Token:
        token = self.current
        if token.kind != "name" or token.text in KEYWORDS:
            found = token.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    # Declarations

    def parse(self) -> Program:
        while self.current.kind != "eof":
            token = self.current
            if token.text == "shared":
                self.advance()
                self.shared.extend(self.declared_names("shared variable", self.shared))
            elif token.text == "handler":
                self.advance()
                self.handlers.extend(self.declared_names("handler", self.handlers))
            elif token.text == "thread":
                self.advance()
                name = self.expect_name("thread name")
                if any(t.name == name.text for t in self.threads):
                    raise self.error(f"duplicate thread {name.text!r}", name)
                self.threads.append(ThreadDecl(name.text, self.block()))
            elif token.text == "message":
                self.advance()
                name = self.expect_name("message name")
                if name.text in self.messages:
                    raise self.error(f"duplicate message {name.text!r}", name)
                self.messages[name.text] = self.block()
            else:
                raise self.error(f"expected a declaration, found {token.text!r}")
        self.check_references()
        return Program(tuple(self.shared), tuple(self.handlers), tuple(self.threads), dict(self.messages))

    def declared_names(self, what: str, existing: List[str]) -> List[str]:
        names: List[str] = []
        while self.current.kind == "name" and self.current.text not in KEYWORDS:
            token = self.advance()
            if token.text in existing or token.text in names:
                raise self.error(f"duplicate {what} {token.text!r}", token)
            names.append(token.text)
        if not names:
            raise self.error(f"expected at least one {what} name")
        return names

    def check_references(self):
        shared = set(self.shared)
        for var, token in self.var_refs:
            if var not in shared:
                raise UndeclaredIdentifierError(f"undeclared shared variable {var!r}", token.line, token.column)
        for message, handler, token in self.posts:
            if message not in self.messages:
                raise UndeclaredIdentifierError(f"undeclared message {message!r}", token.line, token.column)
            if handler not in self.handlers:
                raise UndeclaredIdentifierError(f"undeclared handler {handler!r}", token.line, token.column)
        for body in list(self.messages.values()) + [t.body for t in self.threads]:
            self.check_registers(body)

    def check_registers(self, body: Block, assigned: FrozenSet[str] = frozenset()) -> FrozenSet[str]:
        """Registers assigned on every path through `body`, given those assigned before it

        Raises:
            ProgramError: A register shadows a shared variable or an expression names one
            UnassignedRegisterError: Some path reads a register before assigning it
        """
        shared = set(self.shared)

        def visit_expr(expr: Expr, line: int):
            if isinstance(expr, Reg):
                if expr.name in shared:
                    raise ProgramError(f"shared variable {expr.name!r} used in an expression; load it first", line, 1)
                if expr.name not in assigned:
                    raise UnassignedRegisterError(f"register {expr.name!r} may be read before assignment", line, 1)
            if isinstance(expr, BinOp):
                visit_expr(expr.left, line)
                visit_expr(expr.right, line)
            if isinstance(expr, Neg):
                visit_expr(expr.operand, line)

        for stmt in body:
            reg = getattr(stmt, "reg", None)
            if reg in shared:
                raise ProgramError(f"register {reg!r} shadows a shared variable", stmt.line, 1)
            for attr in ("expr", "expected", "new", "cond"):
                if hasattr(stmt, attr):
                    visit_expr(getattr(stmt, attr), stmt.line)
            if isinstance(stmt, If):
                assigned = self.check_registers(stmt.then, assigned) & self.check_registers(stmt.orelse, assigned)
            elif isinstance(stmt, Repeat):
                inner = self.check_registers(stmt.body, assigned)
                if stmt.count > 0:
                    assigned = inner
            elif reg is not None:
                assigned = assigned | {reg}
        return assigned

    # Statements

    def block(self) -> Block:
        self.expect("{")
        body: List[Statement] = []
        while self.current.text != "}":
            if self.current.kind == "eof":
                raise self.error("unterminated block, expected '}'")
            body.append(self.statement())
        self.advance()
        return tuple(body)

    def statement(self) -> Statement:
        token = self.current
        keyword = token.text if token.kind == "name" else None
        if keyword not in STATEMENT_KEYWORDS:
            raise self.error(f"expected a statement, found {token.text!r}")
        self.advance()
        line = token.line
        if keyword == "store":
            var = self.expect_name("shared variable")
            self.var_refs.append((var.text, var))
            return Store(var.text, self.expression(), line)
        if keyword == "load":
            reg = self.expect_name("register")
            var = self.expect_name("shared variable")
            self.var_refs.append((var.text, var))
            return Load(reg.text, var.text, line)
        if keyword == "cas":
            var = self.expect_name("shared variable")
            self.var_refs.append((var.text, var))
            expected = self.expression()
            new = self.expression()
            reg = self.expect_name("result register")
            return Cas(var.text, expected, new, reg.text, line)
        if keyword == "post":
            message = self.expect_name("message name")
            self.expect("->")
            handler = self.expect_name("handler name")
            self.posts.append((message.text, handler.text, message))
            return Post(message.text, handler.text, line)
        if keyword == "let":
            reg = self.expect_name("register")
            self.expect("=")
            return Let(reg.text, self.expression(), line)
        if keyword == "if":
            cond = self.expression()
            then = self.block()
            orelse: Block = ()
            if self.current.text == "else":
                self.advance()
                orelse = self.block()
            return If(cond, then, orelse, line)
        if keyword == "repeat":
            count = self.current
            if count.kind != "number":
                raise self.error("repeat bound must be an integer literal")
            self.advance()
            return Repeat(int(count.text), self.block(), line)
        return Assert(self.expression(), line)

    # Expressions

    def expression(self) -> Expr:
        left = self.additive()
        if self.current.text in COMPARISON_OPS and self.current.kind == "symbol":
            op = self.advance().text
            left = BinOp(op, left, self.additive())
        return left

    def additive(self) -> Expr:
        left = self.term()
        while self.current.kind == "symbol" and self.current.text in ("+", "-"):
            op = self.advance().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.current.kind == "symbol" and self.current.text == "*":
            self.advance()
            left = BinOp("*", left, self.unary())
        return left

    def unary(self) -> Expr:
        token = self.current
        if token.text == "-" and token.kind == "symbol":
            self.advance()
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Neg(operand)
        if token.kind == "number":
            self.advance()
            return Const(int(token.text))
        if token.text == "(":
            self.advance()
            expr = self.expression()
            self.expect(")")
            return expr
        if token.kind == "name" and token.text not in KEYWORDS:
            self.advance()
            return Reg(token.text)
        raise self.error(f"expected an expression, found {token.text or 'end of input'!r}")


def parse_program(text: str) -> Program:
    """Parse program text into a Program

    Raises:
        ParseError: Syntax error, with line and column
        UndeclaredIdentifierError: Reference to an undeclared name
    """
    return _Parser(tokenize(text)).parse()


# Pretty-printer

def format_expr(expr: Expr) -> str:
    if isinstance(expr, Const):
        return str(expr.value)
    if isinstance(expr, Reg):
        return expr.name
    if isinstance(expr, Neg):
        return f"-({format_expr(expr.operand)})"
    return f"({format_expr(expr.left)} {expr.op} {format_expr(expr.right)})"


def _format_block(body: Block, indent: int) -> List[str]:
    pad = "    " * indent
    lines = []
    for stmt in body:
        if isinstance(stmt, Store):
            lines.append(f"{pad}store {stmt.var} {format_expr(stmt.expr)}")
        elif isinstance(stmt, Load):
            lines.append(f"{pad}load {stmt.reg} {stmt.var}")
        elif isinstance(stmt, Cas):
            lines.append(f"{pad}cas {stmt.var} {format_expr(stmt.expected)} {format_expr(stmt.new)} {stmt.reg}")
        elif isinstance(stmt, Post):
            lines.append(f"{pad}post {stmt.message} -> {stmt.handler}")
        elif isinstance(stmt, Let):
            lines.append(f"{pad}let {stmt.reg} = {format_expr(stmt.expr)}")
        elif isinstance(stmt, Assert):
            lines.append(f"{pad}assert {format_expr(stmt.cond)}")
        elif isinstance(stmt, Repeat):
            lines.append(f"{pad}repeat {stmt.count} {{")
            lines.extend(_format_block(stmt.body, indent + 1))
            lines.append(f"{pad}}}")
        elif isinstance(stmt, If):
            lines.append(f"{pad}if {format_expr(stmt.cond)} {{")
            lines.extend(_format_block(stmt.then, indent + 1))
            if stmt.orelse:
                lines.append(f"{pad}}} else {{")
                lines.extend(_format_block(stmt.orelse, indent + 1))
            lines.append(f"{pad}}}")
    return lines


def format_program(program: Program) -> str:
    """Render a Program as text accepted by parse_program"""
    lines = []
    if program.shared_vars:
        lines.append("shared " + " ".join(program.shared_vars))
    if program.handlers:
        lines.append("handler " + " ".join(program.handlers))
    for thread in program.threads:
        lines.append(f"thread {thread.name} {{")
        lines.extend(_format_block(thread.body, 1))
        lines.append("}")
    for name, body in program.messages.items():
        lines.append(f"message {name} {{")
        lines.extend(_format_block(body, 1))
        lines.append("}")
    return "\n".join(lines) + "\n"
