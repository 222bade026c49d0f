"""Manufactured Poisson problems on the hexagon domain.

The forcing term is never derived by hand.  The exact solution is
written once as an ordinary arithmetic expression and differentiated
with second-order forward mode: :class:`Jet2` carries the truncated
Taylor expansion ``a0 + a1*t + a2*t**2`` of a function of one scalar
parameter, so evaluating ``u(x + t, y)`` and ``u(x, y + t)`` yields the
pure second derivatives and hence the Laplacian to machine precision.
Coefficients may be numpy arrays, which keeps bulk evaluation at
quadrature points vectorised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

SQRT3 = math.sqrt(3.0)


class Jet2:
    """Truncated Taylor number ``a0 + a1 t + a2 t**2``.

    Supports the arithmetic needed by the manufactured solutions:
    ring operations, scalar division, integer powers, sin and cos.
    """

    __slots__ = ("a0", "a1", "a2")

    def __init__(self, a0, a1=0.0, a2=0.0):
        self.a0 = a0
        self.a1 = a1
        self.a2 = a2

    @classmethod
    def variable(cls, value):
        return cls(value, 1.0, 0.0)

    @property
    def value(self):
        return self.a0

    @property
    def first(self):
        """d/dt at t = 0."""
        return self.a1

    @property
    def second(self):
        """d^2/dt^2 at t = 0."""
        return 2.0 * self.a2

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.a0 + other.a0, self.a1 + other.a1, self.a2 + other.a2)
        return Jet2(self.a0 + other, self.a1, self.a2)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.a0, -self.a1, -self.a2)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet2) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet2):
            return Jet2(
                self.a0 * other.a0,
                self.a0 * other.a1 + self.a1 * other.a0,
                self.a0 * other.a2 + self.a1 * other.a1 + self.a2 * other.a0,
            )
        return Jet2(self.a0 * other, self.a1 * other, self.a2 * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            inv = other._reciprocal()
            return self * inv
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def _reciprocal(self):
        inv = 1.0 / self.a0
        return Jet2(inv, -self.a1 * inv * inv,
                    (self.a1 * self.a1 * inv - self.a2) * inv * inv)

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise TypeError("Jet2 powers must be non-negative integers")
        out = Jet2(np.ones_like(np.asarray(self.a0, dtype=float)))
        base = self
        e = int(k)
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def sin(self):
        s, c = np.sin(self.a0), np.cos(self.a0)
        return Jet2(s, c * self.a1, c * self.a2 - 0.5 * s * self.a1 * self.a1)

    def cos(self):
        s, c = np.sin(self.a0), np.cos(self.a0)
        return Jet2(c, -s * self.a1, -s * self.a2 - 0.5 * c * self.a1 * self.a1)

    def exp(self):
        e = np.exp(self.a0)
        return Jet2(e, e * self.a1, e * (self.a2 + 0.5 * self.a1 * self.a1))


def sin(z):
    return z.sin() if isinstance(z, Jet2) else np.sin(z)


def cos(z):
    return z.cos() if isinstance(z, Jet2) else np.cos(z)


def exp(z):
    return z.exp() if isinstance(z, Jet2) else np.exp(z)


def jet_eval(expr: Callable, x, y):
    """Evaluate ``expr`` and its derivatives up to second order.

    Returns ``(u, ux, uy, uxx, uyy)`` from two directional jet passes.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    jx = expr(Jet2.variable(x), Jet2(y))
    jy = expr(Jet2(x), Jet2.variable(y))
    return jx.value, jx.first, jy.first, jx.second, jy.second


def laplacian(expr: Callable, x, y):
    """Laplacian of a scalar expression via second-order jets."""
    _, _, _, uxx, uyy = jet_eval(expr, x, y)
    return uxx + uyy


@dataclass(frozen=True)
class ManufacturedProblem:
    """Poisson problem -laplace(u) = f with homogeneous Dirichlet data.

    ``u``, ``grad_u`` and ``f`` accept scalar or array coordinates.
    """

    name: str
    u: Callable
    grad_u: Callable
    f: Callable


def _from_expression(name: str, expr: Callable) -> ManufacturedProblem:
    def u(x, y):
        return expr(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def grad_u(x, y):
        _, ux, uy, _, _ = jet_eval(expr, x, y)
        return ux, uy

    def f(x, y):
        return -laplacian(expr, x, y)

    return ManufacturedProblem(name=name, u=u, grad_u=grad_u, f=f)


def hex_sine() -> ManufacturedProblem:
    """Smooth solution vanishing on all six edges of the hexagon.

    The three sine factors vanish pairwise on the lines
    ``x + y/sqrt(3) = +-1``, ``x - y/sqrt(3) = -+1`` and
    ``y = +-sqrt(3)/2`` that carry the six boundary edges; the extra
    ``x**2`` keeps the function genuinely non-polynomial.
    """
    half_pi = 0.5 * math.pi

    def expr(X, Y):
        return (
            X ** 2
            * sin(half_pi * (Y / SQRT3 + X + 1.0))
            * sin(half_pi * (Y / SQRT3 - X + 1.0))
            * sin((math.pi / SQRT3) * (Y + 0.5 * SQRT3))
        )

    return _from_expression("hex-sine", expr)


def zero() -> ManufacturedProblem:
    """The trivial problem u = f = 0 (diagnostics and uniqueness tests)."""

    def expr(X, Y):
        return 0.0 * X * Y

    return _from_expression("zero", expr)


PROBLEMS: dict[str, Callable[[], ManufacturedProblem]] = {
    "hex-sine": hex_sine,
}


def get_problem(name: str) -> ManufacturedProblem:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; available: {sorted(PROBLEMS)}"
        ) from None
    return factory()
