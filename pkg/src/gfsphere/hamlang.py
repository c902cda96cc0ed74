"""Expression language for time-dependent Hamiltonians on S^{2n-1}.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' exponent)?
    exponent:= '-'? INT ('^' exponent)?        # right associative, folded to an int
    atom    := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are ``x1..xn``, ``y1..yn`` and ``t``; functions are ``sin``, ``cos``
and ``exp``.  Evaluation is done with forward-mode jets carrying value,
gradient and (optionally) Hessian, vectorised over a leading batch axis.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ArityError, DomainError, HamSyntaxError, UnknownVariable

FUNCTIONS = ("sin", "cos", "exp")
_DIV_FLOOR = 1e-300

# ---------------------------------------------------------------- AST nodes


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int  # position in (x1..xn, y1..yn); -1 for t


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Pow, Call]


@dataclass(frozen=True)
class HamAst:
    """A parsed expression together with its sphere dimension parameter n."""

    root: Node
    n: int
    source: str = ""

    def __str__(self) -> str:
        return to_source(self.root)


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | name | op | end
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(src, pos)
        if not m or m.end() == pos:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise HamSyntaxError(start, "number, name or operator", src[start])
        kind = m.lastgroup
        text = m.group(kind)
        toks.append(_Tok(kind, text, m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, src: str, n: int):
        self.toks = _tokenize(src)
        self.i = 0
        self.n = n

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def _take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def _expect(self, text: str) -> _Tok:
        tok = self.cur
        if tok.text != text or tok.kind != "op":
            raise HamSyntaxError(tok.pos, repr(text), tok.text or "end of input")
        return self._take()

    def parse(self) -> Node:
        node = self.expr()
        if self.cur.kind != "end":
            raise HamSyntaxError(self.cur.pos, "operator or end of input", self.cur.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.cur.kind == "op" and self.cur.text in "+-":
            op = self._take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.cur.kind == "op" and self.cur.text in "*/":
            op = self._take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.cur.kind == "op" and self.cur.text == "-":
            self._take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.cur.kind == "op" and self.cur.text == "^":
            self._take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        sign = 1
        if self.cur.kind == "op" and self.cur.text == "-":
            self._take()
            sign = -1
        tok = self.cur
        if tok.kind != "num" or not tok.text.isdigit():
            raise HamSyntaxError(tok.pos, "integer exponent", tok.text or "end of input")
        self._take()
        value = int(tok.text)
        if self.cur.kind == "op" and self.cur.text == "^":
            self._take()
            pos = self.cur.pos
            rhs = self.exponent()
            if rhs < 0:
                raise HamSyntaxError(pos, "nonnegative nested exponent")
            value = value**rhs
        return sign * value

    def atom(self) -> Node:
        tok = self.cur
        if tok.kind == "num":
            self._take()
            return Num(float(tok.text))
        if tok.kind == "name":
            self._take()
            if tok.text in FUNCTIONS:
                self._expect("(")
                args = [self.expr()]
                while self.cur.kind == "op" and self.cur.text == ",":
                    self._take()
                    args.append(self.expr())
                self._expect(")")
                if len(args) != 1:
                    raise ArityError(tok.text, len(args), tok.pos)
                return Call(tok.text, args[0])
            return self._variable(tok)
        if tok.kind == "op" and tok.text == "(":
            self._take()
            node = self.expr()
            self._expect(")")
            return node
        raise HamSyntaxError(tok.pos, "number, variable, function or '('", tok.text or "end of input")

    def _variable(self, tok: _Tok) -> Var:
        if tok.text == "t":
            return Var("t", -1)
        m = re.fullmatch(r"([xy])([1-9]\d*)", tok.text)
        if not m:
            raise UnknownVariable(tok.text, tok.pos)
        j = int(m.group(2))
        if j > self.n:
            raise UnknownVariable(tok.text, tok.pos)
        idx = j - 1 if m.group(1) == "x" else self.n + j - 1
        return Var(tok.text, idx)


def parse(src: str, n: int) -> HamAst:
    """Parse ``src`` into a :class:`HamAst` over variables of S^{2n-1}."""
    if n < 1:
        raise ValueError("n must be positive")
    return HamAst(_Parser(src, n).parse(), n, src)


# ---------------------------------------------------------------- printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_source(node: Node) -> str:
    """Canonical, fully parenthesised source text of a node."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Pow):
        return f"({to_source(node.base)}^{node.exponent})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(node)


def depth(node: Node) -> int:
    if isinstance(node, (Num, Var)):
        return 1
    if isinstance(node, (Neg, Pow, Call)):
        child = node.operand if isinstance(node, Neg) else node.base if isinstance(node, Pow) else node.arg
        return 1 + depth(child)
    return 1 + max(depth(node.left), depth(node.right))


# ---------------------------------------------------------------- jets


class Jet:
    """Truncated Taylor jet: value, gradient and optional Hessian.

    Arrays carry arbitrary leading batch axes; ``grad`` has trailing axis d
    and ``hess`` trailing axes (d, d).  ``grad is None`` marks a constant.
    """

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad=None, hess=None):
        self.val = val
        self.grad = grad
        self.hess = hess

    @staticmethod
    def _sum(a, b):
        if a is None:
            return b
        if b is None:
            return a
        return a + b

    def __add__(self, other: "Jet") -> "Jet":
        return Jet(self.val + other.val, self._sum(self.grad, other.grad), self._sum(self.hess, other.hess))

    def __sub__(self, other: "Jet") -> "Jet":
        return self + (-other)

    def __neg__(self) -> "Jet":
        return Jet(
            -self.val,
            None if self.grad is None else -self.grad,
            None if self.hess is None else -self.hess,
        )

    def scale(self, c) -> "Jet":
        c = np.asarray(c)
        return Jet(
            c * self.val,
            None if self.grad is None else c[..., None] * self.grad,
            None if self.hess is None else c[..., None, None] * self.hess,
        )

    def __mul__(self, other: "Jet") -> "Jet":
        if self.grad is None:
            return other.scale(self.val)
        if other.grad is None:
            return self.scale(other.val)
        a, b = self, other
        val = a.val * b.val
        grad = a.val[..., None] * b.grad + b.val[..., None] * a.grad
        hess = None
        if a.hess is not None and b.hess is not None:
            cross = a.grad[..., :, None] * b.grad[..., None, :]
            hess = (
                a.val[..., None, None] * b.hess
                + b.val[..., None, None] * a.hess
                + cross
                + np.swapaxes(cross, -1, -2)
            )
        return Jet(val, grad, hess)

    def chain(self, f, df, d2f) -> "Jet":
        """Compose with a scalar function given its value and two derivatives."""
        if self.grad is None:
            return Jet(f)
        grad = df[..., None] * self.grad
        hess = None
        if self.hess is not None:
            hess = df[..., None, None] * self.hess + d2f[..., None, None] * (
                self.grad[..., :, None] * self.grad[..., None, :]
            )
        return Jet(f, grad, hess)

    def reciprocal(self) -> "Jet":
        v = self.val
        if np.any(np.abs(v) < _DIV_FLOOR):
            raise DomainError("division by zero")
        inv = 1.0 / v
        return self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other: "Jet") -> "Jet":
        return self * other.reciprocal()

    def ipow(self, k: int) -> "Jet":
        v = self.val
        if k == 0:
            return Jet(np.ones_like(v))
        if k < 0:
            return self.reciprocal().ipow(-k)
        f = v**k
        df = k * v ** (k - 1)
        d2f = k * (k - 1) * v ** (k - 2) if k >= 2 else np.zeros_like(v)
        return self.chain(f, df, d2f)

    def sin(self) -> "Jet":
        s, c = np.sin(self.val), np.cos(self.val)
        return self.chain(s, c, -s)

    def cos(self) -> "Jet":
        s, c = np.sin(self.val), np.cos(self.val)
        return self.chain(c, -s, -c)

    def exp(self) -> "Jet":
        e = np.exp(self.val)
        return self.chain(e, e, e)


def eval_jet(node: Node, coords: list[Jet], t: Jet) -> Jet:
    """Evaluate ``node`` with jets bound to coordinates and to t."""
    if isinstance(node, Num):
        return Jet(np.full(np.shape(t.val), node.value))
    if isinstance(node, Var):
        return t if node.index < 0 else coords[node.index]
    if isinstance(node, Neg):
        return -eval_jet(node.operand, coords, t)
    if isinstance(node, BinOp):
        a = eval_jet(node.left, coords, t)
        b = eval_jet(node.right, coords, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        return eval_jet(node.base, coords, t).ipow(node.exponent)
    if isinstance(node, Call):
        arg = eval_jet(node.arg, coords, t)
        return getattr(arg, node.func)()
    raise TypeError(node)


def _as_point(ast: HamAst, point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if p.shape[-1] != 2 * ast.n:
        raise ValueError(f"point must have length {2 * ast.n}")
    return p


def evaluate(ast: HamAst, point, t: float = 0.0) -> np.ndarray:
    """Plain value; ``point`` may carry leading batch axes."""
    p = _as_point(ast, point)
    coords = [Jet(p[..., i]) for i in range(p.shape[-1])]
    tj = Jet(np.full(p.shape[:-1], float(t)))
    out = eval_jet(ast.root, coords, tj).val
    return np.broadcast_to(out, p.shape[:-1]).copy() if np.ndim(out) else float(out)


def eval_with_gradient(ast: HamAst, point, t: float = 0.0):
    """Return ``(value, gradient, d/dt)`` by forward-mode dual numbers."""
    p = _as_point(ast, point)
    if p.ndim != 1:
        raise ValueError("eval_with_gradient takes a single point")
    d = p.size + 1
    eye = np.eye(d)
    coords = [Jet(np.float64(p[i]), eye[i]) for i in range(p.size)]
    tj = Jet(np.float64(t), eye[-1])
    out = eval_jet(ast.root, coords, tj)
    grad = np.zeros(d) if out.grad is None else np.broadcast_to(out.grad, (d,))
    return float(out.val), np.array(grad[:-1]), float(grad[-1])


# ---------------------------------------------------------------- random trees


def random_ast(rng: np.random.Generator, n: int, max_depth: int = 6) -> HamAst:
    """Random expression of depth at most ``max_depth`` (test/oracle helper)."""

    names = [f"x{j}" for j in range(1, n + 1)] + [f"y{j}" for j in range(1, n + 1)] + ["t"]

    def leaf() -> Node:
        if rng.random() < 0.7:
            name = names[rng.integers(len(names))]
            idx = -1 if name == "t" else (int(name[1:]) - 1 + (n if name[0] == "y" else 0))
            return Var(name, idx)
        return Num(float(np.round(rng.uniform(0.0, 2.0), 3)))  # unsigned, as the parser reads them

    def grow(d: int) -> Node:
        if d <= 1 or rng.random() < 0.25:
            return leaf()
        r = rng.random()
        if r < 0.5:
            op = "+-*/"[rng.integers(4)]
            return BinOp(op, grow(d - 1), grow(d - 1))
        if r < 0.65:
            return Neg(grow(d - 1))
        if r < 0.8:
            return Pow(grow(d - 1), int(rng.integers(-2, 4)))
        return Call(FUNCTIONS[rng.integers(3)], grow(d - 1))

    root = grow(max_depth)
    return HamAst(root, n, to_source(root))
