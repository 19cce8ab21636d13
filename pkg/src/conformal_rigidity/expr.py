"""Immersion component expressions and their second-order jets.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' INT)?
    base   := NUMBER | 'u'INT | func '(' expr ')' | '(' expr ')' | '-' base
    func   := sin | cos | exp | sqrt

Unary minus binds tighter than ``^``, so ``-u1^2`` is ``(-u1)^2``; write
``-(u1^2)`` or ``0 - u1^2`` for the negated square.  Exponents are
non-negative integer literals and do not chain.

Jets are evaluated by forward propagation of (value, gradient, Hessian).  Any
leading batch shape on the evaluation point is carried through, so a whole
parameter grid is evaluated in one pass.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ArityError, DomainError, ParseError, UnknownIdentifier

FUNCTIONS = ("sin", "cos", "exp", "sqrt")


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Num:
    value: float


@dataclass(frozen=True, eq=False)
class Var:
    index: int  # 1-based


@dataclass(frozen=True, eq=False)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True, eq=False)
class Neg:
    arg: "Node"


@dataclass(frozen=True, eq=False)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True, eq=False)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, BinOp, Neg, Pow, Call]


# -- tokenizer / parser ------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)
_VARIABLE = re.compile(r"u(\d+)\Z")


def _tokenize(text: str):
    tokens = []
    pos = 0
    end = len(text)
    while True:
        while pos < end and text[pos].isspace():
            pos += 1
        if pos == end:
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", end))
    return tokens


class _Parser:
    def __init__(self, text: str, d: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.d = d

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        base = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, text, pos = self.take()
            if kind != "num" or not text.isdigit():
                raise ParseError("exponent must be a non-negative integer literal", pos)
            return Pow(base, int(text))
        return base

    def base(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.base())
        return self.primary()

    def primary(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            m = _VARIABLE.match(text)
            if m:
                idx = int(m.group(1))
                if not 1 <= idx <= self.d:
                    raise UnknownIdentifier(f"variable {text} outside u1..u{self.d}", pos)
                return Var(idx)
            if text in FUNCTIONS:
                self.expect("(")
                if self.peek()[:2] == ("op", ")"):
                    raise ArityError(f"{text} takes 1 argument, got 0", pos)
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != 1:
                    raise ArityError(f"{text} takes 1 argument, got {len(args)}", pos)
                return Call(text, args[0])
            raise UnknownIdentifier(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", pos)


def parse(text: str, d: int) -> Node:
    """Parse ``text`` into an AST over variables ``u1 .. ud``."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text, d).parse()


def unparse(node: Node) -> str:
    """Fully parenthesized text that parses back to an equivalent AST."""
    if isinstance(node, Num):
        if not math.isfinite(node.value):
            raise ValueError("non-finite literal cannot be written")
        s = repr(float(node.value))
        return f"({s})" if node.value < 0 or s.startswith("-") else s
    if isinstance(node, Var):
        return f"u{node.index}"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Neg):
        return f"(-{unparse(node.arg)})"
    if isinstance(node, Pow):
        if node.exponent < 0:
            return f"(1 / ({unparse(node.base)}^{-node.exponent}))"
        return f"({unparse(node.base)}^{node.exponent})"
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def max_variable(node: Node) -> int:
    stack, top = [node], 0
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            top = max(top, n.index)
        elif isinstance(n, BinOp):
            stack += [n.left, n.right]
        elif isinstance(n, (Neg, Call)):
            stack.append(n.arg)
        elif isinstance(n, Pow):
            stack.append(n.base)
    return top


# -- jets --------------------------------------------------------------------

class Jet2:
    """Value, gradient and Hessian of a scalar function, with batch dims.

    ``value`` has shape ``B``, ``grad`` ``B + (d,)``, ``hess`` ``B + (d, d)``.
    """

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = value
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, c, batch, d):
        return cls(np.full(batch, float(c)), np.zeros(batch + (d,)), np.zeros(batch + (d, d)))

    @classmethod
    def variable(cls, u, i):
        """Jet of the coordinate function ``u[..., i]`` (0-based)."""
        batch, d = u.shape[:-1], u.shape[-1]
        grad = np.zeros(batch + (d,))
        grad[..., i] = 1.0
        return cls(u[..., i].copy(), grad, np.zeros(batch + (d, d)))

    def __add__(self, other):
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    def __sub__(self, other):
        return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        a, b = self, other
        av, bv = a.value[..., None], b.value[..., None]
        cross = _outer(a.grad, b.grad)
        return Jet2(
            a.value * b.value,
            av * b.grad + bv * a.grad,
            av[..., None] * b.hess + bv[..., None] * a.hess + cross + np.swapaxes(cross, -1, -2),
        )

    def scale(self, c: float):
        return Jet2(c * self.value, c * self.grad, c * self.hess)

    def chain(self, f0, f1, f2):
        """Compose with a scalar function given its value and two derivatives here."""
        return Jet2(
            f0,
            f1[..., None] * self.grad,
            f1[..., None, None] * self.hess + f2[..., None, None] * _outer(self.grad, self.grad),
        )

    def __truediv__(self, other):
        return self * other.reciprocal()

    def reciprocal(self):
        v = self.value
        if np.any(v == 0):
            raise DomainError("division by zero")
        inv = 1.0 / v
        return self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def powi(self, k: int):
        v = self.value
        if k == 0:
            return Jet2(np.ones_like(v), np.zeros_like(self.grad), np.zeros_like(self.hess))
        if k == 1:
            return self
        if k < 0 and np.any(v == 0):
            raise DomainError("zero raised to a negative power")
        f0 = v**k
        f1 = k * v ** (k - 1)
        f2 = k * (k - 1) * v ** (k - 2)
        return self.chain(f0, f1, f2)

    def __getitem__(self, idx):
        """Select batch entries."""
        return Jet2(self.value[idx], self.grad[idx], self.hess[idx])


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _apply(func: str, a: Jet2) -> Jet2:
    v = a.value
    if func == "sin":
        s, c = np.sin(v), np.cos(v)
        return a.chain(s, c, -s)
    if func == "cos":
        s, c = np.sin(v), np.cos(v)
        return a.chain(c, -s, -c)
    if func == "exp":
        e = np.exp(v)
        return a.chain(e, e, e)
    if func == "sqrt":
        if np.any(v <= 0):
            bad = "negative" if np.any(v < 0) else "zero"
            raise DomainError(f"sqrt of {bad} argument has no finite 2-jet")
        r = np.sqrt(v)
        return a.chain(r, 0.5 / r, -0.25 / (r * v))
    raise UnknownIdentifier(f"unknown function {func!r}")


def _eval(node: Node, u: np.ndarray, cache: dict) -> Jet2:
    key = id(node)
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    if isinstance(node, Num):
        out = Jet2.constant(node.value, u.shape[:-1], u.shape[-1])
    elif isinstance(node, Var):
        if node.index > u.shape[-1]:
            raise UnknownIdentifier(f"variable u{node.index} outside u1..u{u.shape[-1]}")
        out = Jet2.variable(u, node.index - 1)
    elif isinstance(node, BinOp):
        a = _eval(node.left, u, cache)
        b = _eval(node.right, u, cache)
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            out = a / b
        else:
            raise ValueError(f"bad operator {node.op!r}")
    elif isinstance(node, Neg):
        out = -_eval(node.arg, u, cache)
    elif isinstance(node, Pow):
        out = _eval(node.base, u, cache).powi(node.exponent)
    elif isinstance(node, Call):
        out = _apply(node.func, _eval(node.arg, u, cache))
    else:
        raise TypeError(f"not an expression node: {node!r}")
    # keep node alive while its id is a cache key
    cache[key] = (node, out)
    return out


def eval_jet2(node: Node, u) -> Jet2:
    """Evaluate the 2-jet of ``node`` at ``u`` (shape ``(d,)`` or ``B + (d,)``)."""
    return eval_jets([node], u)[0]


def eval_jets(nodes, u) -> list:
    """Evaluate several expressions sharing one subexpression cache."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    cache: dict = {}
    with np.errstate(all="ignore"):
        jets = [_eval(n, u, cache) for n in nodes]
    for j in jets:
        if not (np.all(np.isfinite(j.value)) and np.all(np.isfinite(j.grad)) and np.all(np.isfinite(j.hess))):
            raise DomainError("expression is not finite at the evaluation point")
    return jets


def evaluate(node: Node, u) -> float:
    """Plain value of ``node`` at a single point (no derivatives)."""
    return float(eval_jet2(node, u).value)
