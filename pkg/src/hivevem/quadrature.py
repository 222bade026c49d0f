"""Symmetric Gauss quadrature on triangles.

Rules are stored in barycentric form with weights that sum to one;
:func:`integrate` multiplies by the actual triangle area.  The degrees
provided (2, 4, 6, 8) cover load assembly and error-norm evaluation.

The tabulated coefficients are the classical symmetric rules with 3, 6,
12 and 16 points.  Tables are not taken on faith: the first time a rule
is requested it is checked against the closed-form integral of the
barycentric monomials,

    integral over T of l1^a l2^b l3^c dA = a! b! c! / (a+b+c+2)! * 2|T|,

for every monomial up to the advertised degree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """A fixed rule: barycentric points and area-normalised weights."""

    degree: int
    points: np.ndarray   # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,) summing to one

    @property
    def n_points(self) -> int:
        return self.weights.size


def _orbit1(w):
    third = 1.0 / 3.0
    return [(w, (third, third, third))]


def _orbit3(w, a, b):
    return [(w, (a, b, b)), (w, (b, a, b)), (w, (b, b, a))]


def _orbit6(w, a, b, c):
    return [
        (w, (a, b, c)), (w, (a, c, b)), (w, (b, a, c)),
        (w, (b, c, a)), (w, (c, a, b)), (w, (c, b, a)),
    ]


_TABLES = {
    2: _orbit3(1.0 / 3.0, 2.0 / 3.0, 1.0 / 6.0),
    4: (
        _orbit3(0.223381589678011, 0.108103018168070, 0.445948490915965)
        + _orbit3(0.109951743655322, 0.816847572980459, 0.091576213509771)
    ),
    6: (
        _orbit3(0.116786275726379, 0.501426509658179, 0.249286745170910)
        + _orbit3(0.050844906370207, 0.873821971016996, 0.063089014491502)
        + _orbit6(0.082851075618374, 0.053145049844817,
                  0.310352451033784, 0.636502499121399)
    ),
    8: (
        _orbit1(0.144315607677787)
        + _orbit3(0.095091634267285, 0.081414823414554, 0.459292588292723)
        + _orbit3(0.103217370534718, 0.658861384496480, 0.170569307751760)
        + _orbit3(0.032458497623198, 0.898905543365938, 0.050547228317031)
        + _orbit6(0.027230314174435, 0.008394777409958,
                  0.263112829634638, 0.728492392955404)
    ),
}

SUPPORTED_DEGREES = tuple(sorted(_TABLES))


def monomial_integral(a: int, b: int, c: int, area: float = 1.0) -> float:
    """Exact integral of ``l1**a * l2**b * l3**c`` over a triangle."""
    return (
        2.0 * area * factorial(a) * factorial(b) * factorial(c)
        / factorial(a + b + c + 2)
    )


def _validate(rule: QuadratureRule) -> None:
    lam = rule.points
    for a in range(rule.degree + 1):
        for b in range(rule.degree + 1 - a):
            for c in range(rule.degree + 1 - a - b):
                approx = np.dot(
                    rule.weights,
                    lam[:, 0] ** a * lam[:, 1] ** b * lam[:, 2] ** c,
                )
                exact = monomial_integral(a, b, c, area=1.0)
                if abs(approx - exact) > 1e-14:
                    raise AssertionError(
                        f"degree-{rule.degree} rule misses monomial "
                        f"({a},{b},{c}): {approx!r} vs {exact!r}"
                    )


@lru_cache(maxsize=None)
def rule(degree: int) -> QuadratureRule:
    """Return the tabulated rule exact for polynomials up to ``degree``.

    Raises ``ValueError`` for unsupported degrees.  The rule is
    validated on first use (monomial exactness, positive weights).
    """
    if degree not in _TABLES:
        raise ValueError(
            f"unsupported quadrature degree {degree}; "
            f"available: {SUPPORTED_DEGREES}"
        )
    entries = _TABLES[degree]
    weights = np.array([w for w, _ in entries])
    points = np.array([p for _, p in entries])
    if np.any(weights <= 0.0):
        raise AssertionError(f"degree-{degree} rule has non-positive weights")
    r = QuadratureRule(degree=degree, points=points, weights=weights)
    _validate(r)
    return r


def triangle_area(tri: np.ndarray) -> float:
    """Unsigned area from the three vertex coordinates, shape (3, 2)."""
    u = tri[1] - tri[0]
    v = tri[2] - tri[0]
    return 0.5 * abs(u[0] * v[1] - u[1] * v[0])


def integrate(tri: np.ndarray, g, q: QuadratureRule) -> float:
    """Integrate ``g(x, y)`` over one triangle given by its vertices."""
    tri = np.asarray(tri, dtype=float)
    pts = q.points @ tri
    vals = g(pts[:, 0], pts[:, 1])
    return triangle_area(tri) * float(np.dot(q.weights, vals))
