"""Expression language for holomorphic seeds h(w) and coefficient fields.

A conventional precedence grammar (unary minus binds tightest, then integer
powers, then * /, then + -, all left-associative, parentheses allowed) over
complex/real literals, declared parameter names, variables, and the
functions exp, log, sin, cos, sqrt. Complex literals are written ``a+bi``
style: ``1i``, ``2.5i``, or the bare ``i``.

Derivatives are exact forward-mode dual numbers, so a parsed seed exposes
both h and h' without any finite differencing; the value component of the
dual evaluation performs bitwise the same operations as the plain one.

Principal branches are used for log and sqrt (cut on the negative real
axis); seeds must keep their cuts outside the evaluation region.
Singularities (division by zero, log at 0, sqrt at 0 in the derivative
path) raise, they never return NaN silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    SeedSyntaxError,
    SingularEvaluationError,
    UnknownIdentifierError,
)

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: complex


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Lit, Param, Var, Neg, BinOp, Pow, Call]


# -- tokenizer -------------------------------------------------------------


_TOK_NUM = "num"
_TOK_IDENT = "ident"
_TOK_OP = "op"


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise SeedSyntaxError(f"bad number {text[i:j]!r}", i) from None
            if j < n and text[j] == "i" and not (
                j + 1 < n and (text[j + 1].isalnum() or text[j + 1] == "_")
            ):
                tokens.append((_TOK_NUM, complex(0.0, value), i))
                j += 1
            else:
                tokens.append((_TOK_NUM, complex(value, 0.0), i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            name = text[i:j]
            if name == "i":
                tokens.append((_TOK_NUM, complex(0.0, 1.0), i))
            else:
                tokens.append((_TOK_IDENT, name, i))
            i = j
            continue
        if text.startswith("**", i):
            tokens.append((_TOK_OP, "^", i))
            i += 2
            continue
        if c in "+-*/^(),":
            tokens.append((_TOK_OP, c, i))
            i += 1
            continue
        raise SeedSyntaxError(f"unexpected character {c!r}", i)
    tokens.append((_TOK_OP, "<end>", n))
    return tokens


# -- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, variables: tuple[str, ...]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.advance()
        if kind != _TOK_OP or val != op:
            raise SeedSyntaxError(f"expected {op!r}, found {val!r}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if val != "<end>":
            raise SeedSyntaxError(f"unexpected trailing {val!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == _TOK_OP and val in "+-":
                self.advance()
                node = BinOp(val, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.power()
        while True:
            kind, val, _ = self.peek()
            if kind == _TOK_OP and val in "*/":
                self.advance()
                node = BinOp(val, node, self.power())
            else:
                return node

    def power(self) -> Node:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == _TOK_OP and val == "^":
                self.advance()
                node = Pow(node, self._integer_exponent())
            else:
                return node

    def _integer_exponent(self) -> int:
        sign = 1
        kind, val, off = self.peek()
        if kind == _TOK_OP and val == "-":
            self.advance()
            sign = -1
        kind, val, off = self.advance()
        if kind != _TOK_NUM or val.imag != 0 or val.real != int(val.real):
            raise SeedSyntaxError("power exponent must be an integer literal", off)
        return sign * int(val.real)

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == _TOK_OP and val == "-":
            self.advance()
            return Neg(self.unary())
        return self.primary()

    def primary(self) -> Node:
        kind, val, off = self.advance()
        if kind == _TOK_NUM:
            return Lit(val)
        if kind == _TOK_IDENT:
            nk, nv, _ = self.peek()
            if nk == _TOK_OP and nv == "(":
                if val not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {val!r}")
                self.advance()
                arg = self.expr()
                ck, cv, coff = self.peek()
                if ck == _TOK_OP and cv == ",":
                    raise SeedSyntaxError(
                        f"{val} takes exactly one argument", coff
                    )
                self.expect_op(")")
                return Call(val, arg)
            if val in self.variables:
                return Var(val)
            return Param(val)
        if kind == _TOK_OP and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise SeedSyntaxError(f"unexpected {val!r}", off)


def parse_expr(text: str, variables: tuple[str, ...] = ("w",)) -> Node:
    """Parse an expression whose free variables are `variables`."""
    if not text or not text.strip():
        raise SeedSyntaxError("empty expression", 0)
    return _Parser(text, variables).parse()


def parse_seed(text: str) -> Node:
    """Parse a seed expression h(w); the only variable is w."""
    return parse_expr(text, variables=("w",))


def free_params(node: Node) -> set[str]:
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, Neg):
        return free_params(node.arg)
    if isinstance(node, BinOp):
        return free_params(node.left) | free_params(node.right)
    if isinstance(node, Pow):
        return free_params(node.base)
    if isinstance(node, Call):
        return free_params(node.arg)
    return set()


# -- printer ---------------------------------------------------------------


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return 1 if node.op in "+-" else 2
    if isinstance(node, Pow):
        return 3
    if isinstance(node, Neg):
        return 4
    return 5


def print_expr(node: Node) -> str:
    """Render the AST; parse(print_expr(parse(s))) is structurally identical."""

    def fmt_lit(value: complex) -> str:
        if value.imag == 0:
            return _fmt_real(value.real)
        if value.real == 0:
            if value.imag == 1:
                return "i"
            return _fmt_real(value.imag) + "i"
        # mixed literals never come out of the tokenizer, but print safely
        return f"({_fmt_real(value.real)} + {_fmt_real(value.imag)}i)"

    def _fmt_real(x: float) -> str:
        if x == int(x) and abs(x) < 1e16:
            return str(int(x))
        return repr(x)

    def wrap(child: Node, parent_prec: int) -> str:
        s = print_expr(child)
        if _prec(child) < parent_prec:
            return f"({s})"
        return s

    if isinstance(node, Lit):
        return fmt_lit(node.value)
    if isinstance(node, (Param, Var)):
        return node.name
    if isinstance(node, Neg):
        return "-" + wrap(node.arg, 4)
    if isinstance(node, Pow):
        base = wrap(node.base, 4)
        return f"{base}^{node.exponent}"
    if isinstance(node, BinOp):
        left = wrap(node.left, _prec(node))
        # all binary operators parse left-associative, so a right child at
        # equal precedence must keep its parentheses to round-trip
        right = wrap(node.right, _prec(node) + 1)
        return f"{left} {node.op} {right}"
    if isinstance(node, Call):
        return f"{node.fn}({print_expr(node.arg)})"
    raise TypeError(f"not an AST node: {node!r}")


# -- evaluation ------------------------------------------------------------


@dataclass(frozen=True)
class DualComplex:
    """First-order dual pair (value, derivative) over complex arithmetic."""

    value: complex
    deriv: complex


def _check_finite(values, what: str, where):
    arr = np.asarray(values)
    bad = ~np.isfinite(arr)
    if np.any(bad):
        at = np.asarray(where)[bad].ravel()[0] if np.asarray(where).shape else where
        raise SingularEvaluationError(f"singular evaluation in {what}", at=at)


def _resolve(node: Node, w, params: dict):
    """Common literal/name resolution for both evaluation modes."""
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Param):
        if node.name not in params:
            raise UnknownIdentifierError(
                f"parameter {node.name!r} is not declared"
            )
        return complex(params[node.name])
    raise TypeError


def eval_seed(node: Node, w, params: dict | None = None):
    """Evaluate on a complex scalar or ndarray; raises on singular points."""
    params = params or {}

    def ev(n):
        if isinstance(n, (Lit, Param)):
            return _resolve(n, w, params)
        if isinstance(n, Var):
            return w
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, BinOp):
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            if np.any(np.asarray(b) == 0):
                raise SingularEvaluationError("division by zero", at=_first_bad(b, w))
            return a / b
        if isinstance(n, Pow):
            base = ev(n.base)
            if n.exponent < 0 and np.any(np.asarray(base) == 0):
                raise SingularEvaluationError("zero base with negative power",
                                              at=_first_bad(base, w))
            return base ** n.exponent
        if isinstance(n, Call):
            a = ev(n.arg)
            if n.fn == "exp":
                return np.exp(a)
            if n.fn == "log":
                if np.any(np.asarray(a) == 0):
                    raise SingularEvaluationError("log at 0", at=_first_bad(a, w))
                return np.log(a)
            if n.fn == "sin":
                return np.sin(a)
            if n.fn == "cos":
                return np.cos(a)
            if n.fn == "sqrt":
                return np.sqrt(a)
            raise UnknownIdentifierError(f"unknown function {n.fn!r}")
        raise TypeError(f"not an AST node: {n!r}")

    with np.errstate(all="ignore"):
        out = ev(node)
    _check_finite(out, "expression", w)
    return out


def _first_bad(denominator, w):
    arr = np.asarray(denominator)
    if arr.shape == ():
        return w
    idx = np.argwhere(arr == 0)
    if idx.size and np.asarray(w).shape == arr.shape:
        return np.asarray(w)[tuple(idx[0])]
    return None


def eval_seed_dual(node: Node, w, params: dict | None = None):
    """Forward-mode evaluation: returns (h(w), h'(w)).

    The value component runs bitwise the same operations as
    :func:`eval_seed`; the derivative component applies the exact chain
    rule of dual arithmetic.
    """
    params = params or {}
    zero = np.zeros_like(np.asarray(w, dtype=np.complex128)) if np.asarray(w).shape else 0j
    one = np.ones_like(np.asarray(w, dtype=np.complex128)) if np.asarray(w).shape else 1.0 + 0j

    def ev(n):
        if isinstance(n, (Lit, Param)):
            return _resolve(n, w, params), zero
        if isinstance(n, Var):
            return w, one
        if isinstance(n, Neg):
            v, d = ev(n.arg)
            return -v, -d
        if isinstance(n, BinOp):
            va, da = ev(n.left)
            vb, db = ev(n.right)
            if n.op == "+":
                return va + vb, da + db
            if n.op == "-":
                return va - vb, da - db
            if n.op == "*":
                return va * vb, va * db + da * vb
            if np.any(np.asarray(vb) == 0):
                raise SingularEvaluationError("division by zero", at=_first_bad(vb, w))
            return va / vb, (da * vb - va * db) / (vb * vb)
        if isinstance(n, Pow):
            v, d = ev(n.base)
            k = n.exponent
            if k == 0:
                return v ** 0, zero
            if k < 0 and np.any(np.asarray(v) == 0):
                raise SingularEvaluationError("zero base with negative power",
                                              at=_first_bad(v, w))
            return v ** k, k * v ** (k - 1) * d
        if isinstance(n, Call):
            v, d = ev(n.arg)
            if n.fn == "exp":
                e = np.exp(v)
                return e, e * d
            if n.fn == "log":
                if np.any(np.asarray(v) == 0):
                    raise SingularEvaluationError("log at 0", at=_first_bad(v, w))
                return np.log(v), d / v
            if n.fn == "sin":
                return np.sin(v), np.cos(v) * d
            if n.fn == "cos":
                return np.cos(v), -np.sin(v) * d
            if n.fn == "sqrt":
                s = np.sqrt(v)
                if np.any(np.asarray(s) == 0):
                    raise SingularEvaluationError("sqrt derivative at 0",
                                                  at=_first_bad(v, w))
                return s, d / (2.0 * s)
            raise UnknownIdentifierError(f"unknown function {n.fn!r}")
        raise TypeError(f"not an AST node: {n!r}")

    with np.errstate(all="ignore"):
        value, deriv = ev(node)
    _check_finite(value, "expression", w)
    _check_finite(deriv, "expression derivative", w)
    return value, deriv


def parse_constant(text: str) -> complex:
    """Parse a parameter value: any constant expression, e.g. '0.5', '1+2i'."""
    node = parse_expr(text, variables=())
    return complex(eval_seed(node, 0j, {}))


def format_constant(value: complex) -> str:
    """Render a complex number in the grammar's own literal syntax."""
    value = complex(value)

    def real(x: float) -> str:
        return repr(x) if x != int(x) else str(int(x))

    if value.imag == 0:
        return real(value.real)
    imag = "i" if value.imag == 1 else (
        "-i" if value.imag == -1 else real(value.imag) + "i")
    if value.real == 0:
        return imag
    sign = " + " if not imag.startswith("-") else " - "
    return real(value.real) + sign + imag.lstrip("-")


# -- seeds -----------------------------------------------------------------


class Seed:
    """A holomorphic seed: h and its exact derivative, numpy-vectorized."""

    name = "seed"

    def h(self, w):
        raise NotImplementedError

    def h_dual(self, w):
        """Return (h(w), h'(w))."""
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class ExprSeed(Seed):
    """Seed parsed from an expression in w; derivative via dual numbers."""

    def __init__(self, text: str, params: dict | None = None):
        self.text = text
        self.expr = parse_seed(text)
        self.params = dict(params or {})
        missing = free_params(self.expr) - set(self.params)
        if missing:
            raise UnknownIdentifierError(
                f"undeclared parameters: {', '.join(sorted(missing))}"
            )
        self.name = text

    def h(self, w):
        return eval_seed(self.expr, w, self.params)

    def h_dual(self, w):
        return eval_seed_dual(self.expr, w, self.params)

    def describe(self) -> str:
        if self.params:
            binds = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
            return f"{self.text} with {binds}"
        return self.text


class _ClosedFormSeed(Seed):
    def __init__(self, name, fn, dfn, describe_text):
        self.name = name
        self._fn = fn
        self._dfn = dfn
        self._desc = describe_text

    def h(self, w):
        return self._fn(w)

    def h_dual(self, w):
        return self._fn(w), self._dfn(w)

    def describe(self) -> str:
        return self._desc


def make_builtin_seed(name: str, params: dict | None = None) -> Seed:
    """Named seeds: 'delta' (w + i*delta), 'affine' (a*w + b), 'exp' (i*exp(c*w)).

    Rigidity of the affine/exp conveniences is certified post hoc by the
    transport diagnostics, never assumed.
    """
    params = dict(params or {})
    if name == "delta":
        delta = float(np.real(params.get("delta", 1.0)))
        if delta <= 0:
            raise ValueError("delta must be > 0")
        return _ClosedFormSeed(
            "delta",
            lambda w, d=delta: w + 1j * d,
            lambda w: np.ones_like(np.asarray(w, dtype=np.complex128)) if np.asarray(w).shape else 1.0 + 0j,
            f"w + {delta}i",
        )
    if name == "affine":
        a = complex(params.get("a", 1.0))
        b = complex(params.get("b", 1j))
        return _ClosedFormSeed(
            "affine",
            lambda w, a=a, b=b: a * w + b,
            lambda w, a=a: a * (np.ones_like(np.asarray(w, dtype=np.complex128)) if np.asarray(w).shape else 1.0),
            f"({a})*w + ({b})",
        )
    if name == "exp":
        c = complex(params.get("c", 1.0))
        return _ClosedFormSeed(
            "exp",
            lambda w, c=c: 1j * np.exp(c * w),
            lambda w, c=c: 1j * c * np.exp(c * w),
            f"i*exp(({c})*w)",
        )
    raise UnknownIdentifierError(f"unknown built-in seed {name!r}")


# -- coefficient fields in (x, y) -------------------------------------------


def parse_field_expr(text: str) -> Node:
    """Parse an expression over the plane variables x and y."""
    return parse_expr(text, variables=("x", "y"))


def eval_field(node: Node, X, Y, params: dict | None = None):
    """Evaluate a field expression on coordinate arrays."""
    value = _eval_xy(node, X, Y, params or {}, want_partials=False)[0]
    return value + np.zeros(np.shape(X), dtype=np.complex128)


def eval_field_with_partials(node: Node, X, Y, params: dict | None = None):
    """Return (f, f_x, f_y) via two forward-mode passes."""
    f, fx = _eval_xy(node, X, Y, params or {}, want_partials=True, seed="x")
    _, fy = _eval_xy(node, X, Y, params or {}, want_partials=True, seed="y")
    pad = np.zeros(np.shape(X), dtype=np.complex128)
    return f + pad, fx + pad, fy + pad


def _eval_xy(node: Node, X, Y, params: dict, want_partials: bool, seed: str = "x"):
    X = np.asarray(X, dtype=np.complex128)
    Y = np.asarray(Y, dtype=np.complex128)
    zero = np.zeros_like(X)
    one = np.ones_like(X)

    def ev(n):
        if isinstance(n, Var):
            if n.name == "x":
                return X, (one if seed == "x" else zero)
            return Y, (one if seed == "y" else zero)
        if isinstance(n, (Lit, Param)):
            return _resolve(n, X, params), zero
        if isinstance(n, Neg):
            v, d = ev(n.arg)
            return -v, -d
        if isinstance(n, BinOp):
            va, da = ev(n.left)
            vb, db = ev(n.right)
            if n.op == "+":
                return va + vb, da + db
            if n.op == "-":
                return va - vb, da - db
            if n.op == "*":
                return va * vb, va * db + da * vb
            if np.any(vb == 0):
                raise SingularEvaluationError("division by zero in field expression")
            return va / vb, (da * vb - va * db) / (vb * vb)
        if isinstance(n, Pow):
            v, d = ev(n.base)
            k = n.exponent
            if k == 0:
                return v ** 0, zero
            if k < 0 and np.any(v == 0):
                raise SingularEvaluationError("zero base with negative power")
            return v ** k, k * v ** (k - 1) * d
        if isinstance(n, Call):
            v, d = ev(n.arg)
            if n.fn == "exp":
                e = np.exp(v)
                return e, e * d
            if n.fn == "log":
                if np.any(v == 0):
                    raise SingularEvaluationError("log at 0 in field expression")
                return np.log(v), d / v
            if n.fn == "sin":
                return np.sin(v), np.cos(v) * d
            if n.fn == "cos":
                return np.cos(v), -np.sin(v) * d
            if n.fn == "sqrt":
                s = np.sqrt(v)
                if want_partials and np.any(s == 0):
                    raise SingularEvaluationError("sqrt derivative at 0")
                return s, d / (2.0 * s) if want_partials else zero
            raise UnknownIdentifierError(f"unknown function {n.fn!r}")
        raise TypeError(f"not an AST node: {n!r}")

    with np.errstate(all="ignore"):
        value, deriv = ev(node)
    _check_finite(value, "field expression", None)
    if want_partials:
        _check_finite(deriv, "field expression derivative", None)
    return value, deriv
