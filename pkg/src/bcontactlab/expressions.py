"""A tiny expression language for scalar fields on coordinate charts.

Grammar (infix, left-associative, ``^`` binds tightest and takes an integer
literal exponent only)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' INT)?
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Functions: ``sin``, ``cos``, ``exp``, ``sqrt``, ``abs``.  Identifiers that are
not function names are variables; evaluation checks them against the chart's
variable tuple.  The AST is a frozen dataclass tree with structural equality,
and ``to_string`` prints with minimal parentheses so that
``parse(to_string(e)) == e`` for any parsed tree.

Evaluation is generic over the jet payload: pass :class:`~bcontactlab.jets.Jet1`
or :class:`~bcontactlab.jets.Jet2` objects (or plain floats) in ``env``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .jets import DomainError, Jet1, Jet2

__all__ = [
    "ParseError", "EvalError", "Expr", "Const", "Var", "Unary", "Binary",
    "Power", "parse", "to_string", "evaluate", "free_vars", "differentiate",
    "substitute", "eval_value", "eval_jet1", "eval_jet2",
]

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "abs")


class ParseError(ValueError):
    """Syntax error, with the byte offset where parsing stopped."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ValueError):
    """Evaluation error independent of numeric domain issues."""


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    func: str
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: int


# --------------------------------------------------------------------------
# lexer

_TOKEN_KINDS = ("NUMBER", "IDENT", "OP", "END")


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind, text, offset):
        self.kind = kind
        self.text = text
        self.offset = offset


def _tokenize(src):
    tokens = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            # exponent suffix: 1e-3, 2.5E+10
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"malformed number {text!r}", i) from None
            tokens.append(_Token("NUMBER", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(_Token("IDENT", src[i:j], i))
            i = j
            continue
        if c in "+-*/^()":
            tokens.append(_Token("OP", c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(_Token("END", "", n))
    return tokens


# --------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect_op(self, text):
        t = self.peek()
        if t.kind == "OP" and t.text == text:
            return self.next()
        raise ParseError(f"expected {text!r}", t.offset)

    def parse_expr(self):
        node = self.parse_term()
        while True:
            t = self.peek()
            if t.kind == "OP" and t.text in "+-":
                self.next()
                node = Binary(t.text, node, self.parse_term())
            else:
                return node

    def parse_term(self):
        node = self.parse_factor()
        while True:
            t = self.peek()
            if t.kind == "OP" and t.text in "*/":
                self.next()
                node = Binary(t.text, node, self.parse_factor())
            else:
                return node

    def parse_factor(self):
        t = self.peek()
        if t.kind == "OP" and t.text == "-":
            self.next()
            return _Neg(self.parse_factor())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        t = self.peek()
        if t.kind == "OP" and t.text == "^":
            self.next()
            return Power(base, self.parse_exponent())
        return base

    def parse_exponent(self):
        """Integer exponent; a literal tower like 2^3 folds right-associatively."""
        sign = 1
        t = self.peek()
        if t.kind == "OP" and t.text == "-":
            self.next()
            sign = -1
            t = self.peek()
        if t.kind != "NUMBER" or any(ch in t.text for ch in ".eE"):
            raise ParseError("expected an integer exponent after '^'", t.offset)
        self.next()
        base = int(t.text)
        nxt = self.peek()
        if nxt.kind == "OP" and nxt.text == "^":
            self.next()
            inner = self.parse_exponent()
            if inner < 0:
                raise ParseError("negative exponent inside an exponent tower", nxt.offset)
            base = base ** inner
        return sign * base

    def parse_atom(self):
        t = self.next()
        if t.kind == "NUMBER":
            return Const(float(t.text))
        if t.kind == "IDENT":
            nxt = self.peek()
            if nxt.kind == "OP" and nxt.text == "(":
                if t.text not in FUNCTIONS:
                    raise ParseError(
                        f"unknown function {t.text!r} (expected one of {', '.join(FUNCTIONS)})",
                        t.offset,
                    )
                self.next()
                arg = self.parse_expr()
                self.expect_op(")")
                return Unary(t.text, arg)
            return Var(t.text)
        if t.kind == "OP" and t.text == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ParseError("expected a number, name or '('", t.offset)


def _Neg(inner):
    """Unary minus is stored as ``0 - x`` only when printing would be ambiguous;
    we keep it as a Binary '-' with a zero left so the tree stays a 5-node
    algebra.  Folding ``Const(0.0) - Const(c)`` keeps literal negatives tidy."""
    if isinstance(inner, Const):
        return Const(-inner.value)
    return Binary("-", Const(0.0), inner)


def parse(src, variables=None):
    """Parse ``src`` into an :class:`Expr`, raising :class:`ParseError` with offset.

    When ``variables`` is given, any identifier outside it is rejected up front
    (unknown-identifier error naming the culprit), so a parsed tree is always
    evaluable against its chart.
    """
    p = _Parser(_tokenize(src))
    node = p.parse_expr()
    t = p.peek()
    if t.kind != "END":
        raise ParseError(f"unexpected trailing input {t.text!r}", t.offset)
    if variables is not None:
        stray = free_vars(node) - set(variables)
        if stray:
            raise ParseError(
                f"unknown variable {sorted(stray)[0]!r} "
                f"(chart declares {', '.join(variables)})",
                0,
            )
    return node


# --------------------------------------------------------------------------
# printer

def _prec(e):
    if isinstance(e, (Const, Var, Unary)):
        return 4
    if isinstance(e, Power):
        return 3
    if isinstance(e, Binary) and e.op in "*/":
        return 2
    return 1


def _fmt_const(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_string(e):
    """Print with minimal parentheses; round-trips through :func:`parse`."""
    if isinstance(e, Const):
        if e.value < 0:
            return "-" + _fmt_const(-e.value)
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return f"{e.func}({to_string(e.arg)})"
    if isinstance(e, Power):
        base = to_string(e.base)
        needs_parens = _prec(e.base) <= 3 or (
            isinstance(e.base, Const) and e.base.value < 0)
        if needs_parens:
            base = f"({base})"
        if e.exponent < 0:
            return f"{base}^-{-e.exponent}"
        return f"{base}^{e.exponent}"
    if isinstance(e, Binary):
        # unary minus encoding: 0 - x prints as -x
        if e.op == "-" and e.left == Const(0.0):
            inner = to_string(e.right)
            if _prec(e.right) < 2:
                inner = f"({inner})"
            return "-" + inner
        lp, rp = _prec(e.left), _prec(e.right)
        myp = _prec(e)
        ls = to_string(e.left)
        rs = to_string(e.right)
        if lp < myp:
            ls = f"({ls})"
        # the right side keeps parens at equal precedence too: a + (b - c)
        # must not silently reassociate to (a + b) - c, which differs in floats
        if rp <= myp:
            rs = f"({rs})"
        if not rs.startswith("(") and rs.startswith("-"):
            rs = f"({rs})"
        return f"{ls} {e.op} {rs}"
    raise TypeError(f"not an Expr: {e!r}")


# --------------------------------------------------------------------------
# evaluation / analysis

def free_vars(e):
    """The set of variable names appearing in ``e``."""
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return free_vars(e.arg)
    if isinstance(e, Power):
        return free_vars(e.base)
    if isinstance(e, Binary):
        return free_vars(e.left) | free_vars(e.right)
    raise TypeError(f"not an Expr: {e!r}")


def evaluate(e, env):
    """Evaluate ``e`` with ``env`` mapping variable names to numbers or jets.

    Unknown variables raise :class:`EvalError` naming the missing identifier.
    Numeric domain violations surface as :class:`~bcontactlab.jets.DomainError`.
    """
    if isinstance(e, Const):
        for v in env.values():
            if isinstance(v, Jet2):
                return Jet2.constant(e.value, v.n)
            if isinstance(v, Jet1):
                return Jet1.constant(e.value, len(v.grad))
        return e.value
    return _eval(e, env)


def _eval(e, env):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError(f"unknown variable {e.name!r}") from None
    if isinstance(e, Binary):
        l = _eval(e.left, env)
        r = _eval(e.right, env)
        if e.op == "+":
            return l + r
        if e.op == "-":
            return l - r
        if e.op == "*":
            return l * r
        if _is_plain_zero(r):
            raise DomainError("division by zero")
        return l / r
    if isinstance(e, Power):
        return _eval(e.base, env) ** e.exponent
    if isinstance(e, Unary):
        a = _eval(e.arg, env)
        if isinstance(a, (Jet1, Jet2)):
            if e.func == "abs":
                return a.absval()
            return getattr(a, e.func)()
        return _eval_plain(e.func, a)
    raise TypeError(f"not an Expr: {e!r}")


def _is_plain_zero(r):
    return not isinstance(r, (Jet1, Jet2)) and (
        (type(r) is float or type(r) is int) and r == 0
    )


def _eval_plain(func, a):
    import math as _m

    import numpy as _np

    scalar = type(a) is float or type(a) is int
    if func == "sin":
        return _m.sin(a) if scalar else _np.sin(a)
    if func == "cos":
        return _m.cos(a) if scalar else _np.cos(a)
    if func == "exp":
        try:
            out = _m.exp(a) if scalar else _np.exp(a)
        except OverflowError:
            raise DomainError("exp overflow") from None
        if not scalar and not _np.all(_np.isfinite(out)):
            raise DomainError("exp overflow")
        return out
    if func == "sqrt":
        bad = a <= 0 if scalar else bool(_np.any(a <= 0))
        if bad:
            raise DomainError("sqrt of a non-positive argument")
        return _m.sqrt(a) if scalar else _np.sqrt(a)
    if func == "abs":
        from .jets import ABS_KINK_HALFWIDTH
        bad = abs(a) < ABS_KINK_HALFWIDTH if scalar else bool(
            _np.any(_np.abs(a) < ABS_KINK_HALFWIDTH))
        if bad:
            raise DomainError("abs evaluated at its kink")
        return abs(a) if scalar else _np.abs(a)
    raise EvalError(f"unknown function {func!r}")


# --------------------------------------------------------------------------
# symbolic differentiation and substitution
#
# These two are used to build derived fields (pole-chart counterparts, frame
# coefficients of derived one-forms, Laplacians) as first-class expressions.
# Construction helpers fold the obvious 0/1 identities so derivative trees do
# not balloon, but user-supplied trees are never rewritten.

def _add(a, b):
    if a == Const(0.0):
        return b
    if b == Const(0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def _sub(a, b):
    if b == Const(0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if a == Const(0.0):
        return _neg(b)
    return Binary("-", a, b)


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    return Binary("-", Const(0.0), a)


def _mul(a, b):
    if a == Const(0.0) or b == Const(0.0):
        return Const(0.0)
    if a == Const(1.0):
        return b
    if b == Const(1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def _div(a, b):
    if a == Const(0.0):
        return Const(0.0)
    if b == Const(1.0):
        return a
    return Binary("/", a, b)


def differentiate(e, name):
    """The partial derivative of ``e`` with respect to variable ``name``.

    Purely mechanical; the result folds only multiplications by 0/1 created by
    the rules themselves.
    """
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0) if e.name == name else Const(0.0)
    if isinstance(e, Binary):
        dl = differentiate(e.left, name)
        dr = differentiate(e.right, name)
        if e.op == "+":
            return _add(dl, dr)
        if e.op == "-":
            return _sub(dl, dr)
        if e.op == "*":
            return _add(_mul(dl, e.right), _mul(e.left, dr))
        num = _sub(_mul(dl, e.right), _mul(e.left, dr))
        return _div(num, Power(e.right, 2))
    if isinstance(e, Power):
        db = differentiate(e.base, name)
        if e.exponent == 0:
            return Const(0.0)
        coeff = _mul(Const(float(e.exponent)),
                     Power(e.base, e.exponent - 1) if e.exponent != 1 else Const(1.0))
        if e.exponent == 1:
            return db
        return _mul(coeff, db)
    if isinstance(e, Unary):
        da = differentiate(e.arg, name)
        if e.func == "sin":
            outer = Unary("cos", e.arg)
        elif e.func == "cos":
            outer = _neg(Unary("sin", e.arg))
        elif e.func == "exp":
            outer = e
        elif e.func == "sqrt":
            outer = _div(Const(0.5), e)
        elif e.func == "abs":
            outer = _div(e, e.arg)
        else:
            raise EvalError(f"unknown function {e.func!r}")
        return _mul(outer, da)
    raise TypeError(f"not an Expr: {e!r}")


def substitute(e, mapping):
    """Replace each variable named in ``mapping`` by its expression, in one pass."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Unary):
        return Unary(e.func, substitute(e.arg, mapping))
    if isinstance(e, Power):
        return Power(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Binary):
        return Binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    raise TypeError(f"not an Expr: {e!r}")


# --------------------------------------------------------------------------
# point evaluation helpers

def eval_value(e, variables, point):
    """Plain value of ``e`` at ``point`` (floats or arrays, no derivatives)."""
    return _eval(e, dict(zip(variables, point)))


def eval_jet1(e, variables, point):
    """Value and gradient of ``e`` at ``point`` as a :class:`Jet1`."""
    seeds = Jet1.seed(tuple(point))
    out = _eval(e, dict(zip(variables, seeds)))
    if not isinstance(out, Jet1):  # constant expression
        return Jet1.constant(out, len(point))
    return out


def eval_jet2(e, variables, point):
    """Value, gradient and Hessian of ``e`` at ``point`` as a :class:`Jet2`."""
    seeds = Jet2.seed(tuple(point))
    out = _eval(e, dict(zip(variables, seeds)))
    if not isinstance(out, Jet2):
        return Jet2.constant(out, len(point))
    return out
