"""A small recursive-descent parser for data-function expressions.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

``^`` is right-associative and binds tighter than unary minus, so ``-x^2``
is ``-(x^2)``. Names are the variables ``x`` and ``t``, the constants ``pi``,
``e`` and ``l``, and the functions ``sin``, ``cos``, ``exp`` and ``sqrt``.
Expressions compile to closures that evaluate on numpy arrays.
"""

from __future__ import annotations

import re
from typing import Callable

import numpy as np

FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
}

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\S))")


class ExpressionError(ValueError):
    def __init__(self, message: str, text: str, pos: int) -> None:
        super().__init__(f"{message} at column {pos + 1} in {text!r}")
        self.pos = pos


Node = Callable[[dict], np.ndarray]


class _Parser:
    def __init__(self, text: str, constants: dict[str, float], variables: tuple[str, ...]) -> None:
        self.text = text
        self.constants = constants
        self.variables = variables
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                break
            num, name, op = m.groups()
            start = m.start(m.lastindex)
            if num is not None:
                self.tokens.append(("num", num, start))
            elif name is not None:
                self.tokens.append(("name", name, start))
            else:
                self.tokens.append(("op", op, start))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def error(self, message: str) -> ExpressionError:
        return ExpressionError(message, self.text, self.tokens[self.i][2])

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def accept(self, *ops: str) -> str | None:
        kind, val, _ = self.peek()
        if kind == "op" and val in ops:
            self.i += 1
            return val
        return None

    def expect(self, op: str) -> None:
        if self.accept(op) is None:
            raise self.error(f"expected {op!r}")

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while (op := self.accept("+", "-")) is not None:
            rhs = self.term()
            node = (lambda a, b: lambda v: a(v) + b(v))(node, rhs) if op == "+" else \
                (lambda a, b: lambda v: a(v) - b(v))(node, rhs)
        return node

    def term(self) -> Node:
        node = self.unary()
        while (op := self.accept("*", "/")) is not None:
            rhs = self.unary()
            node = (lambda a, b: lambda v: a(v) * b(v))(node, rhs) if op == "*" else \
                (lambda a, b: lambda v: a(v) / b(v))(node, rhs)
        return node

    def unary(self) -> Node:
        if self.accept("-") is not None:
            inner = self.unary()
            return lambda v: -inner(v)
        if self.accept("+") is not None:
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.accept("^") is not None:
            exp = self.unary()
            return lambda v: np.power(base(v), exp(v))
        return base

    def atom(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "num":
            self.i += 1
            c = float(val)
            return lambda v: c
        if kind == "name":
            self.i += 1
            if val in FUNCTIONS:
                fn = FUNCTIONS[val]
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return lambda v: fn(arg(v))
            if val in self.variables:
                return lambda v: v[val]
            if val in self.constants:
                c = float(self.constants[val])
                return lambda v: c
            self.i -= 1
            raise self.error(f"unknown name {val!r}")
        if self.accept("(") is not None:
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("expected a number, name or '('" if kind != "end" else "unexpected end of expression")


def compile_expression(text: str, variables: tuple[str, ...] = ("x", "t"), l: float = 1.0) -> Callable:
    """Compile *text* to ``f(*arrays)`` taking one argument per variable.

    The result always broadcasts to the shape of the arguments, so constant
    expressions return arrays as well.
    """
    constants = {"pi": np.pi, "e": np.e, "l": l}
    node = _Parser(text, constants, variables).parse()

    def f(*args):
        if len(args) != len(variables):
            raise TypeError(f"expected {len(variables)} arguments, got {len(args)}")
        arrs = [np.asarray(a, dtype=np.float64) for a in args]
        shape = np.broadcast_shapes(*(a.shape for a in arrs))
        with np.errstate(all="ignore"):
            out = node(dict(zip(variables, arrs)))
        return np.broadcast_to(np.asarray(out, dtype=np.float64), shape).copy()

    f.__doc__ = text
    return f
