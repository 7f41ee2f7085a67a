"""A small expression language for custom convolution kernels.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = ("+" | "-") , unary | power ;
    power   = atom , [ "^" , unary ] ;               (* right associative *)
    atom    = number
            | "x" , "[" , integer , "]"             (* 1-based coordinate *)
            | "norm"                                (* norm of x in the kernel's space *)
            | "pi"
            | func , "(" , expr , { "," , expr } , ")"
            | "(" , expr , ")" ;
    func    = "abs" | "sqrt" | "exp" | "log" | "sin" | "cos" | "sign" | "min" | "max" ;
    number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ]
            | "." , digits , [ exponent ] ;

Whitespace is ignored. Evaluation is vectorized over a stack of points.
Example: ``x[1] / norm^2`` is the first Riesz kernel.
"""

from __future__ import annotations

import re

import numpy as np

from ._util import ValidationError

MAX_LENGTH = 4096
MAX_DEPTH = 64

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),\[\]]))")

_FUNCS = {
    "abs": (1, np.abs), "sqrt": (1, np.sqrt), "exp": (1, np.exp), "log": (1, np.log),
    "sin": (1, np.sin), "cos": (1, np.cos), "sign": (1, np.sign),
    "min": (2, np.minimum), "max": (2, np.maximum),
}


class ExpressionError(ValidationError):
    """Malformed kernel expression; the message carries the character offset."""


def tokenize(text: str) -> list[tuple[str, str, int]]:
    if len(text) > MAX_LENGTH:
        raise ExpressionError(f"expression longer than {MAX_LENGTH} characters")
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ExpressionError(f"unexpected character {text[bad]!r} at offset {bad}")
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, dimension: int):
        self.toks = tokenize(text)
        self.i = 0
        self.dim = dimension
        self.depth = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            found = tok[1] or "end of input"
            raise ExpressionError(f"expected {value!r} at offset {tok[2]}, found {found!r}")
        self.i += 1
        return tok

    def enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExpressionError(f"expression nested deeper than {MAX_DEPTH}")

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionError(f"unexpected {tok[1]!r} at offset {tok[2]}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = (lambda a, b: lambda x, n: a(x, n) + b(x, n))(node, rhs) if op == "+" else \
                (lambda a, b: lambda x, n: a(x, n) - b(x, n))(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = (lambda a, b: lambda x, n: a(x, n) * b(x, n))(node, rhs) if op == "*" else \
                (lambda a, b: lambda x, n: a(x, n) / b(x, n))(node, rhs)
        return node

    def unary(self):
        self.enter()
        try:
            tok = self.peek()
            if tok[1] in ("+", "-"):
                self.take()
                inner = self.unary()
                return inner if tok[1] == "+" else (lambda a: lambda x, n: -a(x, n))(inner)
            return self.power()
        finally:
            self.depth -= 1

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            exp = self.unary()
            return lambda x, n: np.power(base(x, n), exp(x, n))
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            c = float(val)
            return lambda x, n: c
        if kind == "op" and val == "(":
            self.enter()
            node = self.expr()
            self.depth -= 1
            self.take(")")
            return node
        if kind == "name":
            if val == "x":
                self.take("[")
                k_tok = self.take()
                if k_tok[0] != "num" or not k_tok[1].isdigit():
                    raise ExpressionError(f"coordinate index must be an integer at offset {k_tok[2]}")
                k = int(k_tok[1])
                if not 1 <= k <= self.dim:
                    raise ExpressionError(f"coordinate x[{k}] outside 1..{self.dim} at offset {k_tok[2]}")
                self.take("]")
                return lambda x, n: x[..., k - 1]
            if val == "norm":
                return lambda x, n: n
            if val == "pi":
                return lambda x, n: np.pi
            if val in _FUNCS:
                arity, fn = _FUNCS[val]
                self.take("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                if len(args) != arity:
                    raise ExpressionError(f"{val} takes {arity} argument(s), got {len(args)} at offset {off}")
                if arity == 1:
                    a = args[0]
                    return lambda x, n: fn(a(x, n))
                a, b = args
                return lambda x, n: fn(a(x, n), b(x, n))
            raise ExpressionError(f"unknown name {val!r} at offset {off}")
        raise ExpressionError(f"unexpected {val or 'end of input'!r} at offset {off}")


def compile_expression(text: str, dimension: int, norm=None):
    """Compile ``text`` into ``f(x)`` acting on arrays of shape (..., dimension).

    ``norm`` maps such arrays to their norms; Euclidean by default.
    """
    if dimension < 1:
        raise ExpressionError("dimension must be positive")
    fn = _Parser(text, dimension).parse()
    norm = norm or (lambda x: np.sqrt(np.sum(x * x, axis=-1)))

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != dimension:
            raise ValidationError(f"expected points of dimension {dimension}")
        with np.errstate(all="ignore"):
            out = fn(x, norm(x))
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape[:-1]).copy()

    return evaluate
