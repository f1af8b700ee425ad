"""Small closed-form expression language used for metric components.

The grammar is deliberately tiny: rational constants, coordinates,
named parameters, +, -, *, /, powers with exact rational exponents and
the functions sqrt/exp/ln/sin/cos.  It is closed under partial
differentiation, which is all the tensor machinery needs.  sqrt(x) is
stored canonically as x^(1/2).

See docs/grammar.md for the concrete syntax.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Expr", "Const", "Coord", "Param", "Neg", "Add", "Sub", "Mul", "Div",
    "Pow", "Fn", "ParamEnv", "ExprError", "ParseError",
    "UnknownIdentifierError", "DomainError", "parse_expr", "differentiate",
    "eval_expr", "to_string", "const", "coord", "param", "add", "sub",
    "mul", "div", "neg", "pow_", "fn", "free_symbols", "compile_exprs",
]

FUNCTION_NAMES = ("sqrt", "exp", "ln", "sin", "cos")


class ExprError(Exception):
    """Base class for everything this module raises."""


class ParseError(ExprError):
    """Syntax error; ``offset`` is the byte offset into the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    """Identifier that is neither a declared coordinate nor parameter."""


class DomainError(ExprError):
    """Evaluation left the expression's domain (ln/sqrt of a negative,
    division by zero, overflow).  ``expr`` is the offending subexpression."""

    def __init__(self, message: str, expr: "Expr"):
        super().__init__(f"{message} in `{to_string(expr)}`")
        self.expr = expr


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    """Immutable expression node.  Use the module-level smart constructors
    (or the operator overloads) rather than instantiating subclasses, so
    constant folding and the trivial identities are applied uniformly."""

    def __str__(self) -> str:
        return to_string(self)

    def __add__(self, other):
        return add(self, _as_expr(other))

    def __radd__(self, other):
        return add(_as_expr(other), self)

    def __sub__(self, other):
        return sub(self, _as_expr(other))

    def __rsub__(self, other):
        return sub(_as_expr(other), self)

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    def __rmul__(self, other):
        return mul(_as_expr(other), self)

    def __truediv__(self, other):
        return div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return div(_as_expr(other), self)

    def __pow__(self, exponent):
        return pow_(self, exponent)

    def __neg__(self):
        return neg(self)


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True)
class Coord(Expr):
    name: str


@dataclass(frozen=True)
class Param(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Sub(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Mul(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Div(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


@dataclass(frozen=True)
class Fn(Expr):
    name: str  # one of exp, ln, sin, cos (sqrt canonicalises to Pow)
    arg: Expr


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    if isinstance(x, float):
        return Const(Fraction(x))
    raise TypeError(f"cannot coerce {x!r} to Expr")


# ---------------------------------------------------------------------------
# Smart constructors (constant folding + trivial identities only)
# ---------------------------------------------------------------------------

def const(v) -> Const:
    return Const(Fraction(v))


def coord(name: str) -> Coord:
    return Coord(name)


def param(name: str) -> Param:
    return Param(name)


def _is_const(e: Expr, v=None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if _is_const(b, 1):
        return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _exact_root(v: Fraction, q: int) -> Fraction | None:
    """Exact q-th root of a non-negative rational, or None."""
    def iroot(n: int) -> int | None:
        if n in (0, 1):
            return n
        r = round(n ** (1.0 / q))
        for c in (r - 1, r, r + 1):
            if c >= 0 and c ** q == n:
                return c
        return None

    pn, pd = iroot(v.numerator), iroot(v.denominator)
    if pn is None or pd is None:
        return None
    return Fraction(pn, pd)


def pow_(base: Expr, exponent) -> Expr:
    e = Fraction(exponent)
    if e == 0:
        return ONE  # includes 0^0 -> 1 by convention
    if e == 1:
        return base
    if isinstance(base, Const):
        v = base.value
        if e.denominator == 1:
            if v != 0 or e > 0:
                return Const(v ** e.numerator)
        elif v >= 0:
            root = _exact_root(v, e.denominator)
            if root is not None and (root != 0 or e > 0):
                return Const(root ** e.numerator)
    return Pow(base, e)


def fn(name: str, arg: Expr) -> Expr:
    if name == "sqrt":
        return pow_(arg, Fraction(1, 2))
    if name not in FUNCTION_NAMES:
        raise ExprError(f"unknown function {name!r}")
    return Fn(name, arg)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to the coordinate
    named ``var``.  Total on the grammar; never approximates.

    Derivatives of shared subtrees are computed once per call (the trees
    produced by repeated differentiation are heavily shared DAGs)."""
    memo: dict[int, Expr] = {}
    keep: list[Expr] = []  # pin ids for the duration of the walk

    def d(node: Expr) -> Expr:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, (Const, Param)):
            out = ZERO
        elif isinstance(node, Coord):
            out = ONE if node.name == var else ZERO
        elif isinstance(node, Neg):
            out = neg(d(node.arg))
        elif isinstance(node, Add):
            out = add(d(node.lhs), d(node.rhs))
        elif isinstance(node, Sub):
            out = sub(d(node.lhs), d(node.rhs))
        elif isinstance(node, Mul):
            out = add(mul(d(node.lhs), node.rhs), mul(node.lhs, d(node.rhs)))
        elif isinstance(node, Div):
            num = sub(mul(d(node.lhs), node.rhs), mul(node.lhs, d(node.rhs)))
            out = div(num, pow_(node.rhs, 2))
        elif isinstance(node, Pow):
            out = mul(mul(Const(node.exponent),
                          pow_(node.base, node.exponent - 1)), d(node.base))
        elif isinstance(node, Fn):
            inner = d(node.arg)
            if node.name == "exp":
                out = mul(Fn("exp", node.arg), inner)
            elif node.name == "ln":
                out = div(inner, node.arg)
            elif node.name == "sin":
                out = mul(Fn("cos", node.arg), inner)
            elif node.name == "cos":
                out = neg(mul(Fn("sin", node.arg), inner))
            else:
                raise ExprError(f"cannot differentiate {node.name!r}")
        else:
            raise ExprError(f"cannot differentiate node {type(node).__name__}")
        memo[id(node)] = out
        keep.append(node)
        return out

    return d(e)


def free_symbols(e: Expr) -> tuple[set[str], set[str]]:
    """Return (coordinate names, parameter names) referenced by ``e``."""
    coords: set[str] = set()
    params: set[str] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Coord):
            coords.add(n.name)
        elif isinstance(n, Param):
            params.add(n.name)
        elif isinstance(n, Neg):
            stack.append(n.arg)
        elif isinstance(n, (Add, Sub, Mul, Div)):
            stack.append(n.lhs)
            stack.append(n.rhs)
        elif isinstance(n, Pow):
            stack.append(n.base)
        elif isinstance(n, Fn):
            stack.append(n.arg)
    return coords, params


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _eval(e: Expr, bindings: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, (Coord, Param)):
        try:
            return float(bindings[e.name])
        except KeyError:
            raise DomainError(f"unbound symbol {e.name!r}", e) from None
    if isinstance(e, Neg):
        return -_eval(e.arg, bindings)
    if isinstance(e, Add):
        return _eval(e.lhs, bindings) + _eval(e.rhs, bindings)
    if isinstance(e, Sub):
        return _eval(e.lhs, bindings) - _eval(e.rhs, bindings)
    if isinstance(e, Mul):
        return _eval(e.lhs, bindings) * _eval(e.rhs, bindings)
    if isinstance(e, Div):
        den = _eval(e.rhs, bindings)
        if den == 0.0:
            raise DomainError("division by zero", e)
        return _eval(e.lhs, bindings) / den
    if isinstance(e, Pow):
        base = _eval(e.base, bindings)
        exp = e.exponent
        if exp.denominator != 1 and base < 0.0:
            raise DomainError("fractional power of a negative value", e)
        if base == 0.0 and exp < 0:
            raise DomainError("zero raised to a negative power", e)
        try:
            return base ** float(exp)
        except OverflowError:
            raise DomainError("overflow", e) from None
    if isinstance(e, Fn):
        arg = _eval(e.arg, bindings)
        try:
            if e.name == "exp":
                return math.exp(arg)
            if e.name == "ln":
                if arg <= 0.0:
                    raise DomainError("ln of a non-positive value", e)
                return math.log(arg)
            if e.name == "sin":
                return math.sin(arg)
            if e.name == "cos":
                return math.cos(arg)
        except OverflowError:
            raise DomainError("overflow", e) from None
    raise ExprError(f"cannot evaluate node {type(e).__name__}")


def eval_expr(e: Expr, point: Sequence[float], coords: Sequence[str],
              env: "ParamEnv | Mapping[str, float] | None" = None) -> float:
    """Evaluate ``e`` at a point given in coordinate order.

    Raises DomainError (with the offending subexpression) on ln/sqrt of a
    negative, division by zero, or a non-finite result.
    """
    bindings = dict(zip(coords, (float(p) for p in point)))
    if env is not None:
        bindings.update(env.values if isinstance(env, ParamEnv) else env)
    out = _eval(e, bindings)
    if not math.isfinite(out):
        raise DomainError("non-finite result", e)
    return out


# ---------------------------------------------------------------------------
# Parameter environment
# ---------------------------------------------------------------------------

class ParamEnv:
    """Immutable map from parameter name to real value."""

    __slots__ = ("_items",)

    def __init__(self, values: Mapping[str, float] | None = None):
        items = tuple(sorted((str(k), float(v))
                             for k, v in (values or {}).items()))
        object.__setattr__(self, "_items", items)

    @property
    def values(self) -> dict[str, float]:
        return dict(self._items)

    def names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self._items)

    def __getitem__(self, name: str) -> float:
        for k, v in self._items:
            if k == name:
                return v
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(k == name for k, _ in self._items)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names())

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, ParamEnv) and self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._items)
        return f"ParamEnv({inner})"

    def merged(self, extra: Mapping[str, float]) -> "ParamEnv":
        d = self.values
        d.update(extra)
        return ParamEnv(d)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 10, 20, 25, 30, 40


def _frac_str(v: Fraction) -> tuple[str, int]:
    if v.denominator == 1:
        s = str(v.numerator)
        return s, (_PREC_ATOM if v >= 0 else _PREC_NEG)
    return f"{v.numerator}/{v.denominator}", _PREC_MUL


def _render(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        return _frac_str(e.value)
    if isinstance(e, (Coord, Param)):
        return e.name, _PREC_ATOM
    if isinstance(e, Neg):
        s, p = _render(e.arg)
        if p < _PREC_NEG:
            s = f"({s})"
        return f"-{s}", _PREC_NEG
    if isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        ls, lp = _render(e.lhs)
        rs, rp = _render(e.rhs)
        if lp < _PREC_ADD:
            ls = f"({ls})"
        if rp <= _PREC_ADD:
            rs = f"({rs})"
        return f"{ls} {op} {rs}", _PREC_ADD
    if isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        ls, lp = _render(e.lhs)
        rs, rp = _render(e.rhs)
        if lp < _PREC_MUL:
            ls = f"({ls})"
        if rp <= _PREC_MUL:
            rs = f"({rs})"
        return f"{ls}{op}{rs}", _PREC_MUL
    if isinstance(e, Pow):
        if e.exponent == Fraction(1, 2):
            s, _ = _render(e.base)
            return f"sqrt({s})", _PREC_ATOM
        bs, bp = _render(e.base)
        if bp <= _PREC_POW:
            bs = f"({bs})"
        es, _ = _frac_str(e.exponent)
        if e.exponent.denominator != 1:
            es = f"({es})"
        return f"{bs}^{es}", _PREC_POW
    if isinstance(e, Fn):
        s, _ = _render(e.arg)
        return f"{e.name}({s})", _PREC_ATOM
    raise ExprError(f"cannot print node {type(e).__name__}")


def to_string(e: Expr) -> str:
    return _render(e)[0]


# ---------------------------------------------------------------------------
# Parser (recursive descent)
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind, self.text, self.pos = kind, text, pos


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8"))


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None or m.end() == pos:
            stripped = pos + len(src[pos:]) - len(src[pos:].lstrip())
            if stripped >= len(src):
                break
            raise ParseError(f"unexpected character {src[stripped]!r}",
                             _byte_offset(src, stripped))
        if m.lastgroup == "num":
            tokens.append(_Token("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(_Token("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(_Token(m.group("op"), m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(_Token("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, coords: Sequence[str], params: Sequence[str]):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0
        self.coords = set(coords)
        self.params = set(params)

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: _Token,
              cls: type[ParseError] = ParseError):
        raise cls(message, _byte_offset(self.src, tok.pos))

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            self.error(f"unexpected {tok.text!r}", tok)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "+":
            self.advance()
            return self.unary()
        if tok.kind == "-":
            self.advance()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "^":
            self.advance()
            etok = self.peek()
            exponent = self.unary()  # right-associative chain
            if not isinstance(exponent, Const):
                self.error("exponent must be a rational constant", etok)
            return pow_(base, exponent.value)
        return base

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Const(Fraction(tok.text))
        if tok.kind == "ident":
            name = tok.text
            if name in FUNCTION_NAMES:
                open_tok = self.peek()
                if open_tok.kind != "(":
                    self.error(f"function {name!r} requires parentheses",
                               open_tok)
                self.advance()
                arg = self.expr()
                close_tok = self.advance()
                if close_tok.kind != ")":
                    self.error("expected ')'", close_tok)
                return fn(name, arg)
            if name in self.coords:
                return Coord(name)
            if name in self.params:
                return Param(name)
            self.error(f"unknown identifier {name!r}", tok,
                       UnknownIdentifierError)
        if tok.kind == "(":
            e = self.expr()
            close_tok = self.advance()
            if close_tok.kind != ")":
                self.error("expected ')'", close_tok)
            return e
        self.error("expected a value", tok)


def parse_expr(src: str, coords: Sequence[str],
               params: Sequence[str] = ()) -> Expr:
    """Parse ``src`` against declared coordinate and parameter names.

    Raises ParseError with the byte offset of the problem, or
    UnknownIdentifierError for undeclared identifiers.
    """
    return _Parser(src, coords, params).parse()


# ---------------------------------------------------------------------------
# Compiled batch evaluation (hash-consed common subexpressions)
# ---------------------------------------------------------------------------

_COMPILE_GLOBALS = {
    "__builtins__": {},
    "_exp": np.exp, "_ln": np.log, "_sin": np.sin, "_cos": np.cos,
    "_sqrt": np.sqrt,
}


class _Emitter:
    """Emits straight-line code with structural subexpression sharing.
    Keys are built from the children's keys, so interning is linear in
    the DAG size regardless of how often subtrees are shared."""

    def __init__(self, names: Mapping[str, str]):
        self.names = names
        self.lines: list[str] = []
        self.by_key: dict[tuple, str] = {}
        self.by_id: dict[int, tuple] = {}
        self.keep: list[Expr] = []

    def _fresh(self, key: tuple, rhs: str) -> str:
        var = f"_t{len(self.by_key)}"
        self.by_key[key] = var
        self.lines.append(f"    {var} = {rhs}")
        return var

    def ref(self, e: Expr) -> str:
        key = self.key(e)
        return self.by_key[key]

    def key(self, e: Expr) -> tuple:
        got = self.by_id.get(id(e))
        if got is not None:
            return got
        if isinstance(e, Const):
            k = ("k", e.value)
            if k not in self.by_key:
                self.by_key[k] = repr(float(e.value))
        elif isinstance(e, (Coord, Param)):
            k = ("n", e.name)
            if k not in self.by_key:
                self.by_key[k] = self.names[e.name]
        elif isinstance(e, Neg):
            k = ("neg", self.key(e.arg))
            if k not in self.by_key:
                self._fresh(k, f"-{self.by_key[k[1]]}")
        elif isinstance(e, (Add, Sub, Mul, Div)):
            op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
            kl, kr = self.key(e.lhs), self.key(e.rhs)
            k = (op, kl, kr)
            if k not in self.by_key:
                self._fresh(k, f"{self.by_key[kl]} {op} {self.by_key[kr]}")
        elif isinstance(e, Pow):
            kb = self.key(e.base)
            k = ("pow", kb, e.exponent)
            if k not in self.by_key:
                base = self.by_key[kb]
                if e.exponent == Fraction(1, 2):
                    self._fresh(k, f"_sqrt({base})")
                elif e.exponent.denominator == 1:
                    self._fresh(k, f"{base} ** ({e.exponent.numerator})")
                else:
                    self._fresh(k, f"{base} ** ({float(e.exponent)!r})")
        elif isinstance(e, Fn):
            ka = self.key(e.arg)
            k = ("fn", e.name, ka)
            if k not in self.by_key:
                self._fresh(k, f"_{e.name}({self.by_key[ka]})")
        else:
            raise ExprError(f"cannot compile node {type(e).__name__}")
        self.by_id[id(e)] = k
        self.keep.append(e)
        return k


def compile_program(exprs: Sequence[Expr], coords: Sequence[str],
                    param_names: Sequence[str]):
    """Compile expressions into one vectorised evaluator with parameters
    passed at call time: f(points (n,4), values (len(param_names),))
    returns (len(exprs), n).  Domain violations surface as non-finite
    entries; callers wanting precise errors fall back on eval_expr."""
    names = {c: f"_c{i}" for i, c in enumerate(coords)}
    names.update({p: f"_p{i}" for i, p in enumerate(param_names)})
    em = _Emitter(names)
    outs = [em.ref(e) for e in exprs]
    args = [f"_c{i}" for i in range(len(coords))]
    args += [f"_p{i}" for i in range(len(param_names))]
    src = "def _f({}):\n{}\n    return [{}]\n".format(
        ", ".join(args), "\n".join(em.lines) or "    pass",
        ", ".join(outs))
    namespace = dict(_COMPILE_GLOBALS)
    exec(compile(src, "<lorhol-expr>", "exec"), namespace)  # noqa: S102
    f = namespace["_f"]
    n_exprs = len(exprs)
    n_coords = len(coords)

    def evaluate(points: np.ndarray, param_values=()) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cols = [pts[:, i] for i in range(n_coords)]
        with np.errstate(all="ignore"):
            vals = f(*cols, *[float(v) for v in param_values])
        out = np.empty((n_exprs, pts.shape[0]), dtype=float)
        for k, v in enumerate(vals):
            out[k] = v
        return out

    return evaluate


def compile_exprs(exprs: Sequence[Expr], coords: Sequence[str],
                  env: "ParamEnv | Mapping[str, float] | None" = None):
    """Compile expressions into a vectorised evaluator with the parameter
    environment bound up front: f(points (n,4)) -> (len(exprs), n)."""
    baked = dict(env.values if isinstance(env, ParamEnv) else (env or {}))
    pnames = tuple(sorted(baked))
    prog = compile_program(exprs, coords, pnames)
    values = tuple(baked[p] for p in pnames)

    def evaluate(points: np.ndarray) -> np.ndarray:
        return prog(points, values)

    return evaluate
