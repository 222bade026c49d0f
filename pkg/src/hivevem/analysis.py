"""Error norms and convergence-order bookkeeping.

The superclose quantity is the difference between the space interpolant
of the exact solution and the discrete solution.  Both are piecewise
linear on the triangular submesh, so its L2 norm is integrated exactly
by a degree-2 rule, its H1 seminorm is a sum of constant gradients and
its max norm is taken over the mesh vertices (the honeycomb degrees of
freedom; interior hexagon centres are slaved values, not vertices).

True errors against the exact solution use a higher-degree rule,
degree 6 by default, on the subtriangles.  Lift errors are broken over
patches: each patch cubic is integrated over its own 16 subtriangles,
and the H1 seminorm uses the analytic cubic gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import HoneycombMesh
from .lift import LiftResult
from .problem import ManufacturedProblem
from .quadrature import rule
from .system import FieldP1, p1_gradients

#: Errors at or below this scale count as round-off; no order is formed.
ROUNDOFF = 100.0 * np.finfo(float).eps


class MeshMismatchError(ValueError):
    """Fields compared across different meshes."""


def _nodal_l2(mesh: HoneycombMesh, nodal: np.ndarray, degree: int) -> float:
    q = rule(degree)
    vals = nodal[mesh.tris] @ q.points.T          # (T, nq)
    return math.sqrt(mesh.tri_area * float(np.einsum("tq,q->", vals ** 2, q.weights)))


def _nodal_h1(mesh: HoneycombMesh, nodal: np.ndarray) -> float:
    grads, area = p1_gradients(mesh.tri_xy())
    g = np.einsum("tk,tkx->tx", nodal[mesh.tris], grads)
    return math.sqrt(float(np.sum(area * np.sum(g * g, axis=1))))


def norms_superclose(
    u_h: FieldP1,
    u_i: FieldP1,
    degree: int = 2,
) -> tuple[float, float, float]:
    """L2, H1-seminorm and vertex max norm of ``u_i - u_h``.

    Degree 2 already integrates the piecewise-quadratic integrand
    exactly; the parameter exists so the exactness is testable.
    """
    if u_h.mesh is not u_i.mesh:
        raise MeshMismatchError("superclose norms need fields on one mesh")
    mesh = u_h.mesh
    diff = u_i.values - u_h.values
    l2 = _nodal_l2(mesh, diff, degree)
    h1 = _nodal_h1(mesh, diff)
    linf = float(np.max(np.abs(diff[mesh.nh_nodes])))
    return l2, h1, linf


def norm_l2_true(approx, problem: ManufacturedProblem, degree: int = 6) -> float:
    """L2 norm of ``u - approx`` for a nodal field or a lifted solution."""
    if isinstance(approx, FieldP1):
        return _field_l2_error(approx, problem, degree)
    if isinstance(approx, LiftResult):
        return _lift_l2_error(approx, problem, degree)
    raise TypeError(f"cannot measure {type(approx).__name__}")


def _field_l2_error(u_h: FieldP1, problem, degree: int) -> float:
    mesh = u_h.mesh
    q = rule(degree)
    pts = np.einsum("qk,tkx->tqx", q.points, mesh.tri_xy())
    exact = np.asarray(
        problem.u(pts[..., 0].ravel(), pts[..., 1].ravel())
    ).reshape(pts.shape[:2])
    approx = u_h.values[mesh.tris] @ q.points.T
    sq = mesh.tri_area * np.einsum("tq,q->", (exact - approx) ** 2, q.weights)
    return math.sqrt(float(sq))


def _patch_points(lift: LiftResult, degree: int):
    mesh = lift.grid.mesh
    q = rule(degree)
    pts = np.einsum("qk,tkx->tqx", q.points, mesh.tri_xy())
    return q, pts


def _lift_l2_error(lift: LiftResult, problem, degree: int) -> float:
    mesh = lift.grid.mesh
    q, pts = _patch_points(lift, degree)
    total = 0.0
    for patch, fit in zip(lift.grid.patches, lift.fits):
        p = pts[patch.tri_indices].reshape(-1, 2)
        diff = np.asarray(problem.u(p[:, 0], p[:, 1])) - fit(p)
        sq = diff.reshape(-1, q.n_points) ** 2 @ q.weights
        total += mesh.tri_area * float(sq.sum())
    return math.sqrt(total)


def norm_h1_broken_true(
    lift: LiftResult, problem: ManufacturedProblem, degree: int = 6
) -> float:
    """Patch-broken H1 seminorm of ``u - lift`` via analytic gradients."""
    mesh = lift.grid.mesh
    q, pts = _patch_points(lift, degree)
    total = 0.0
    for patch, fit in zip(lift.grid.patches, lift.fits):
        p = pts[patch.tri_indices].reshape(-1, 2)
        ux, uy = problem.grad_u(p[:, 0], p[:, 1])
        g = fit.gradient(p)
        sq = (np.asarray(ux) - g[:, 0]) ** 2 + (np.asarray(uy) - g[:, 1]) ** 2
        total += mesh.tri_area * float((sq.reshape(-1, q.n_points) @ q.weights).sum())
    return math.sqrt(total)


@dataclass
class StudyRow:
    """One refinement level of a convergence study.

    Lift entries are ``None`` below the first lift level or when the
    lift is disabled; order entries are the 0.0 sentinel on first rows
    and whenever either error sits at round-off.
    """

    level: int
    h: float
    dofs: int
    e_ih_l2: float
    e_ih_h1: float
    e_ih_linf: float
    e_l2: float
    e_lift_l2: float | None = None
    e_lift_h1h: float | None = None
    r_ih_l2: float = 0.0
    r_ih_h1: float = 0.0
    r_ih_linf: float = 0.0
    r_l2: float = 0.0
    r_lift_l2: float | None = None
    r_lift_h1h: float | None = None


def observed_order(e_prev, e_cur) -> float:
    """Dyadic convergence order with a 0.0 sentinel for undefined cases."""
    if e_prev is None or e_cur is None:
        return 0.0
    if e_prev <= ROUNDOFF or e_cur <= ROUNDOFF:
        return 0.0
    return math.log2(e_prev / e_cur)


def orders(rows: list[StudyRow]) -> list[StudyRow]:
    """Fill the order columns of consecutive study rows in place."""
    prev = None
    for row in rows:
        if prev is None:
            row.r_ih_l2 = row.r_ih_h1 = row.r_ih_linf = row.r_l2 = 0.0
            row.r_lift_l2 = 0.0 if row.e_lift_l2 is not None else None
            row.r_lift_h1h = 0.0 if row.e_lift_h1h is not None else None
        else:
            row.r_ih_l2 = observed_order(prev.e_ih_l2, row.e_ih_l2)
            row.r_ih_h1 = observed_order(prev.e_ih_h1, row.e_ih_h1)
            row.r_ih_linf = observed_order(prev.e_ih_linf, row.e_ih_linf)
            row.r_l2 = observed_order(prev.e_l2, row.e_l2)
            if row.e_lift_l2 is not None:
                row.r_lift_l2 = observed_order(prev.e_lift_l2, row.e_lift_l2)
            if row.e_lift_h1h is not None:
                row.r_lift_h1h = observed_order(prev.e_lift_h1h, row.e_lift_h1h)
        prev = row
    return rows
