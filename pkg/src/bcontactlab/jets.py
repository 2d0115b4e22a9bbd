"""Forward-mode jets: exact values, gradients and Hessians in one pass.

``Jet1`` carries the value and gradient of a quantity with respect to a fixed
tuple of seed variables; ``Jet2`` additionally carries the full Hessian
(second-order forward propagation, the scalar analogue of hyper-dual numbers).
Payloads may be python floats or numpy arrays of a common shape, so the same
tree walk evaluates a single point or a whole grid.

Domain policy (shared by every consumer):

* division by an exact zero, or a non-finite quotient, raises :class:`DomainError`;
* ``sqrt`` requires a strictly positive argument (the slope blows up at 0);
* ``abs`` is non-differentiable at 0 and refuses arguments with ``|x| < 1e-12``
  rather than silently picking a subgradient;
* integer powers with negative exponent require a non-zero base;
* ``exp`` overflow is a domain error, not an ``inf``.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["DomainError", "Jet1", "Jet2", "ABS_KINK_HALFWIDTH"]

ABS_KINK_HALFWIDTH = 1e-12


class DomainError(ValueError):
    """Evaluation left the domain of a primitive operation."""


def _is_scalar(x):
    return type(x) is float or type(x) is int


def _any_nonpositive(x):
    if _is_scalar(x):
        return x <= 0.0
    return bool(np.any(x <= 0.0))


def _any_zero(x):
    if _is_scalar(x):
        return x == 0.0
    return bool(np.any(x == 0.0))


def _any_in_kink(x):
    if _is_scalar(x):
        return abs(x) < ABS_KINK_HALFWIDTH
    return bool(np.any(np.abs(x) < ABS_KINK_HALFWIDTH))


def _all_finite(x):
    if _is_scalar(x):
        return math.isfinite(x)
    return bool(np.all(np.isfinite(x)))


def _sin(x):
    return math.sin(x) if _is_scalar(x) else np.sin(x)


def _cos(x):
    return math.cos(x) if _is_scalar(x) else np.cos(x)


def _exp(x):
    if _is_scalar(x):
        try:
            return math.exp(x)
        except OverflowError:
            raise DomainError("exp overflow") from None
    out = np.exp(x)
    if not np.all(np.isfinite(out)):
        raise DomainError("exp overflow")
    return out


def _sqrt(x):
    return math.sqrt(x) if _is_scalar(x) else np.sqrt(x)


def _sign(x):
    if _is_scalar(x):
        return 1.0 if x > 0.0 else -1.0
    return np.sign(x)


def _ipow(x, m):
    try:
        out = x ** m
    except (OverflowError, ZeroDivisionError):
        raise DomainError(f"power {m} overflow or zero base") from None
    if not _all_finite(out):
        raise DomainError(f"power {m} produced a non-finite value")
    return out


class Jet1:
    """Value and gradient with respect to ``len(grad)`` seed variables."""

    __slots__ = ("value", "grad")

    def __init__(self, value, grad=()):
        self.value = value
        self.grad = grad

    @staticmethod
    def seed(values):
        """Jets for the coordinates themselves: unit gradient rows."""
        n = len(values)
        return tuple(
            Jet1(values[i], tuple(1.0 if j == i else 0.0 for j in range(n)))
            for i in range(n)
        )

    @staticmethod
    def constant(value, n):
        return Jet1(value, (0.0,) * n)

    def _lift(self, other):
        if isinstance(other, Jet1):
            return other
        return Jet1(float(other) if _is_scalar(other) else other, (0.0,) * len(self.grad))

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        o = self._lift(other)
        return Jet1(self.value + o.value, tuple(a + b for a, b in zip(self.grad, o.grad)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Jet1(self.value - o.value, tuple(a - b for a, b in zip(self.grad, o.grad)))

    def __rsub__(self, other):
        return self._lift(other).__sub__(self)

    def __neg__(self):
        return Jet1(-self.value, tuple(-a for a in self.grad))

    def __mul__(self, other):
        o = self._lift(other)
        va, vb = self.value, o.value
        return Jet1(va * vb, tuple(ga * vb + va * gb for ga, gb in zip(self.grad, o.grad)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if _any_zero(o.value):
            raise DomainError("division by zero")
        q = self.value / o.value
        if not _all_finite(q):
            raise DomainError("non-finite quotient")
        inv = 1.0 / o.value
        return Jet1(q, tuple((ga - q * gb) * inv for ga, gb in zip(self.grad, o.grad)))

    def __rtruediv__(self, other):
        return self._lift(other).__truediv__(self)

    def __pow__(self, m):
        if not isinstance(m, int):
            raise DomainError("only integer exponents are supported")
        if m < 0 and _any_zero(self.value):
            raise DomainError("negative power of zero")
        if m == 0:
            return Jet1(self.value * 0.0 + 1.0, (0.0,) * len(self.grad))
        k1 = m * _ipow(self.value, m - 1)
        return Jet1(_ipow(self.value, m), tuple(k1 * g for g in self.grad))

    # -- chain rule primitives ------------------------------------------
    def _chain(self, k0, k1):
        return Jet1(k0, tuple(k1 * g for g in self.grad))

    def sin(self):
        return self._chain(_sin(self.value), _cos(self.value))

    def cos(self):
        return self._chain(_cos(self.value), -_sin(self.value))

    def exp(self):
        e = _exp(self.value)
        return self._chain(e, e)

    def sqrt(self):
        if _any_nonpositive(self.value):
            raise DomainError("sqrt of a non-positive argument")
        s = _sqrt(self.value)
        return self._chain(s, 0.5 / s)

    def absval(self):
        if _any_in_kink(self.value):
            raise DomainError("abs evaluated at its kink")
        return self._chain(abs(self.value), _sign(self.value))

    def __repr__(self):
        return f"Jet1({self.value!r}, grad={self.grad!r})"


def _sym(n, entry):
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            e = entry(i, j)
            rows[i][j] = e
            rows[j][i] = e
    return tuple(tuple(r) for r in rows)


class Jet2:
    """Value, gradient and full symmetric Hessian."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = value
        self.grad = grad
        self.hess = hess

    @staticmethod
    def seed(values):
        n = len(values)
        zrow = _sym(n, lambda i, j: 0.0)
        return tuple(
            Jet2(values[i], tuple(1.0 if j == i else 0.0 for j in range(n)), zrow)
            for i in range(n)
        )

    @staticmethod
    def constant(value, n):
        return Jet2(value, (0.0,) * n, _sym(n, lambda i, j: 0.0))

    @property
    def n(self):
        return len(self.grad)

    def _lift(self, other):
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(float(other) if _is_scalar(other) else other, self.n)

    def __add__(self, other):
        o = self._lift(other)
        return Jet2(
            self.value + o.value,
            tuple(a + b for a, b in zip(self.grad, o.grad)),
            _sym(self.n, lambda i, j: self.hess[i][j] + o.hess[i][j]),
        )

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Jet2(
            self.value - o.value,
            tuple(a - b for a, b in zip(self.grad, o.grad)),
            _sym(self.n, lambda i, j: self.hess[i][j] - o.hess[i][j]),
        )

    def __rsub__(self, other):
        return self._lift(other).__sub__(self)

    def __neg__(self):
        return Jet2(-self.value, tuple(-a for a in self.grad),
                    _sym(self.n, lambda i, j: -self.hess[i][j]))

    def __mul__(self, other):
        o = self._lift(other)
        va, vb = self.value, o.value
        ga, gb = self.grad, o.grad
        return Jet2(
            va * vb,
            tuple(ga[i] * vb + va * gb[i] for i in range(self.n)),
            _sym(self.n, lambda i, j: self.hess[i][j] * vb + ga[i] * gb[j]
                 + ga[j] * gb[i] + va * o.hess[i][j]),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if _any_zero(o.value):
            raise DomainError("division by zero")
        q = self.value / o.value
        if not _all_finite(q):
            raise DomainError("non-finite quotient")
        inv = 1.0 / o.value
        qg = tuple((self.grad[i] - q * o.grad[i]) * inv for i in range(self.n))
        return Jet2(
            q, qg,
            _sym(self.n, lambda i, j: (self.hess[i][j] - qg[i] * o.grad[j]
                                       - qg[j] * o.grad[i] - q * o.hess[i][j]) * inv),
        )

    def __rtruediv__(self, other):
        return self._lift(other).__truediv__(self)

    def __pow__(self, m):
        if not isinstance(m, int):
            raise DomainError("only integer exponents are supported")
        if m < 0 and _any_zero(self.value):
            raise DomainError("negative power of zero")
        if m == 0:
            return Jet2.constant(self.value * 0.0 + 1.0, self.n)
        k0 = _ipow(self.value, m)
        k1 = m * _ipow(self.value, m - 1)
        k2 = 0.0 if m == 1 else m * (m - 1) * _ipow(self.value, m - 2)
        return self._chain(k0, k1, k2)

    def _chain(self, k0, k1, k2):
        g = self.grad
        return Jet2(
            k0,
            tuple(k1 * gi for gi in g),
            _sym(self.n, lambda i, j: k1 * self.hess[i][j] + k2 * g[i] * g[j]),
        )

    def sin(self):
        s, c = _sin(self.value), _cos(self.value)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = _sin(self.value), _cos(self.value)
        return self._chain(c, -s, -c)

    def exp(self):
        e = _exp(self.value)
        return self._chain(e, e, e)

    def sqrt(self):
        if _any_nonpositive(self.value):
            raise DomainError("sqrt of a non-positive argument")
        s = _sqrt(self.value)
        return self._chain(s, 0.5 / s, -0.25 / (s * self.value))

    def absval(self):
        if _any_in_kink(self.value):
            raise DomainError("abs evaluated at its kink")
        return self._chain(abs(self.value), _sign(self.value), 0.0)

    def __repr__(self):
        return f"Jet2({self.value!r}, grad={self.grad!r})"
