"""Discrete Poisson system on the honeycomb mesh.

The trial space is continuous piecewise P1 on the auxiliary triangular
submesh, restricted by two linear conditions: homogeneous Dirichlet
values on boundary nodes and, at every interior hexagon centre, the
value equal to the mean of the six surrounding corner values.  The
centre condition is the energy-minimising (discrete harmonic) extension
of the corner data on the equilateral fan, which is what makes the
scheme stabiliser-free: no extra penalty term ever enters.

Assembly builds the full P1 stiffness matrix K and load vector over all
lattice nodes, then condenses through the prolongation C that expresses
every node value in terms of the free corner degrees of freedom:

    A = C^T K C,     b = C^T l.

A is symmetric positive definite because C has full column rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lattice import HoneycombMesh
from .problem import ManufacturedProblem
from .quadrature import rule

#: P1 stiffness entries on an equilateral triangle (any size).
_DIAG = 1.0 / np.sqrt(3.0)
_OFF = -0.5 / np.sqrt(3.0)


def element_stiffness(s: float) -> np.ndarray:
    """P1 stiffness matrix of an equilateral triangle with edge ``s``.

    Computed from the vertex geometry with the standard co-factor
    formula; the result is independent of ``s`` and of the triangle's
    position or orientation.
    """
    if s <= 0.0:
        raise ValueError(f"edge length must be positive, got {s}")
    verts = np.array([
        [0.0, 0.0],
        [s, 0.0],
        [0.5 * s, 0.5 * np.sqrt(3.0) * s],
    ])
    grads, area = p1_gradients(verts[None])
    g = grads[0]
    return area[0] * (g @ g.T)


def p1_gradients(tri_xy: np.ndarray):
    """Constant P1 basis gradients on triangles.

    Parameters
    ----------
    tri_xy : (T, 3, 2) array
        Vertex coordinates, counterclockwise.

    Returns
    -------
    grads : (T, 3, 2) array
        Gradient of the hat function of each local vertex.
    area : (T,) array
        Signed areas (positive for counterclockwise input).
    """
    x = tri_xy[..., 0]
    y = tri_xy[..., 1]
    bx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    by = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area2 = (
        (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
        - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    )
    grads = np.stack([bx, by], axis=2) / area2[:, None, None]
    return grads, 0.5 * area2


@dataclass(frozen=True)
class DofMap:
    """Free degrees of freedom: interior mesh vertices, in node order."""

    node_to_dof: np.ndarray
    dof_to_node: np.ndarray
    n_dofs: int
    n_boundary: int
    n_centers: int


class SparseSpd:
    """Symmetric positive definite matrix in compressed-row storage.

    Thin wrapper over a scipy CSR matrix that fixes the contract:
    square, column indices sorted within each row, and numerically
    symmetric.  Positive definiteness follows from the construction
    (congruence of the P1 stiffness with a full-rank prolongation) and
    is exercised by the tests rather than re-proved here.
    """

    def __init__(self, matrix: sp.spmatrix):
        csr = sp.csr_matrix(matrix)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"matrix must be square, got {csr.shape}")
        csr.sum_duplicates()
        csr.sort_indices()
        if csr.nnz:
            scale = float(np.max(np.abs(csr.data)))
            gap = abs(csr - csr.T)
            asym = float(gap.max()) if gap.nnz else 0.0
            if asym > 1e-14 * max(scale, 1.0):
                raise ValueError(f"matrix is not symmetric: |A - A^T| = {asym}")
        self._csr = csr

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def indptr(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def data(self) -> np.ndarray:
        return self._csr.data

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self._csr @ x

    __matmul__ = matvec

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def to_csr(self) -> sp.csr_matrix:
        return self._csr

    def to_csc(self) -> sp.csc_matrix:
        return self._csr.tocsc()


@dataclass(frozen=True)
class FieldP1:
    """Piecewise-linear nodal field on the full triangular submesh."""

    mesh: HoneycombMesh
    values: np.ndarray

    def constraint_gap(self) -> float:
        """Largest violation of the centre-mean and boundary conditions."""
        mesh = self.mesh
        gap = 0.0
        if mesh.centers.size:
            avg = self.values[mesh.center_corners].mean(axis=1)
            gap = float(np.max(np.abs(self.values[mesh.centers] - avg)))
        bdry = float(np.max(np.abs(self.values[mesh.on_boundary])))
        return max(gap, bdry)


def build_dof_map(mesh: HoneycombMesh) -> DofMap:
    free = ~mesh.on_boundary & ~mesh.is_center
    dof_to_node = np.flatnonzero(free)
    node_to_dof = -np.ones(mesh.n_nodes, dtype=np.int64)
    node_to_dof[dof_to_node] = np.arange(dof_to_node.size)
    return DofMap(
        node_to_dof=node_to_dof,
        dof_to_node=dof_to_node,
        n_dofs=dof_to_node.size,
        n_boundary=int(mesh.on_boundary.sum()),
        n_centers=mesh.centers.size,
    )


def prolongation(mesh: HoneycombMesh, dofs: DofMap) -> sp.csr_matrix:
    """Node values from free dofs: identity rows for free vertices,
    1/6 corner averages for centres, zero rows for boundary nodes."""
    rows = [dofs.dof_to_node]
    cols = [np.arange(dofs.n_dofs)]
    vals = [np.ones(dofs.n_dofs)]
    if mesh.centers.size:
        corner_dofs = dofs.node_to_dof[mesh.center_corners]  # (C, 6)
        c_rows = np.repeat(mesh.centers, 6)
        keep = corner_dofs.ravel() >= 0
        rows.append(c_rows[keep])
        cols.append(corner_dofs.ravel()[keep])
        vals.append(np.full(int(keep.sum()), 1.0 / 6.0))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.n_nodes, dofs.n_dofs),
    )


def load_vector(
    mesh: HoneycombMesh,
    problem: ManufacturedProblem,
    degree: int = 4,
) -> np.ndarray:
    """Load vector of ``f`` against the P1 basis over all lattice nodes."""
    q = rule(degree)
    pts = np.einsum("qk,tkx->tqx", q.points, mesh.tri_xy())
    fvals = np.asarray(
        problem.f(pts[..., 0].ravel(), pts[..., 1].ravel())
    ).reshape(mesh.n_tris, q.n_points)
    contrib = mesh.tri_area * np.einsum("tq,q,qk->tk", fvals, q.weights, q.points)
    load = np.zeros(mesh.n_nodes)
    np.add.at(load, mesh.tris, contrib)
    return load


def assemble(
    mesh: HoneycombMesh,
    problem: ManufacturedProblem,
    load_quad_degree: int = 4,
):
    """Assemble the condensed SPD system.

    Returns ``(A, b, dofs)``.  A zero-dimensional system (level 1 has
    no free vertices) is returned as such; the solution field is then
    identically zero.
    """
    dofs = build_dof_map(mesh)
    tris = mesh.tris
    n_tris = tris.shape[0]

    ke = element_stiffness(mesh.s)
    rows = tris[:, [0, 0, 0, 1, 1, 1, 2, 2, 2]].ravel()
    cols = tris[:, [0, 1, 2, 0, 1, 2, 0, 1, 2]].ravel()
    vals = np.tile(ke.ravel(), n_tris)
    K = sp.coo_matrix(
        (vals, (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes)
    ).tocsr()

    load = load_vector(mesh, problem, load_quad_degree)

    C = prolongation(mesh, dofs)
    A = SparseSpd(C.T @ K @ C)
    b = C.T @ load
    return A, b, dofs


def expand(x: np.ndarray, dofs: DofMap, mesh: HoneycombMesh) -> FieldP1:
    """Nodal field from a free-dof vector: boundary zero, centres
    set to the mean of their corners."""
    x = np.asarray(x, dtype=float)
    if x.shape != (dofs.n_dofs,):
        raise ValueError(f"expected {dofs.n_dofs} dof values, got {x.shape}")
    values = np.zeros(mesh.n_nodes)
    values[dofs.dof_to_node] = x
    if mesh.centers.size:
        values[mesh.centers] = values[mesh.center_corners].mean(axis=1)
    return FieldP1(mesh=mesh, values=values)


def restrict(field: FieldP1, dofs: DofMap) -> np.ndarray:
    """Free-dof vector of a nodal field (inverse of :func:`expand` on
    fields satisfying the space constraints)."""
    return field.values[dofs.dof_to_node].copy()


def recover_centers(
    u_h: FieldP1,
    problem: ManufacturedProblem,
    load_quad_degree: int = 4,
) -> FieldP1:
    """Re-expand hexagon centres by exact static condensation.

    The condensed matrix ``C^T K C`` coincides with the Schur
    complement that eliminates the centre unknowns from the plain P1
    system on the submesh, because the centre-average constraint is the
    discrete-harmonic extension with respect to K.  The corner values
    of ``u_h`` therefore already solve the fine P1 system; only the
    centre values differ.  Undoing the elimination assigns each centre

        u(x0) = mean(corners) + l(x0) / (2*sqrt(3)),

    where ``l`` is the load vector (the centre's diagonal stiffness on
    the six-triangle fan is 2*sqrt(3), independent of scale).  These
    centre values are pointwise fourth-order accurate, while the plain
    corner average is only second-order accurate there, so error norms
    of the solution should be measured on this representation.
    """
    mesh = u_h.mesh
    values = u_h.values.copy()
    if mesh.centers.size:
        load = load_vector(mesh, problem, load_quad_degree)
        values[mesh.centers] = (
            values[mesh.center_corners].mean(axis=1)
            + load[mesh.centers] / (2.0 * np.sqrt(3.0))
        )
    return FieldP1(mesh=mesh, values=values)


def _scalar_source(src):
    return src.u if isinstance(src, ManufacturedProblem) else src


def interpolate(src, mesh: HoneycombMesh) -> FieldP1:
    """Space interpolant: samples at mesh vertices, centre values set
    to the mean of the six sampled corners.

    ``src`` is a manufactured problem or a callable ``u(x, y)``.
    """
    u = _scalar_source(src)
    values = np.zeros(mesh.n_nodes)
    nh = mesh.nh_nodes
    values[nh] = u(mesh.node_xy[nh, 0], mesh.node_xy[nh, 1])
    if mesh.centers.size:
        values[mesh.centers] = values[mesh.center_corners].mean(axis=1)
    return FieldP1(mesh=mesh, values=values)


def interpolate_pointwise(src, mesh: HoneycombMesh) -> FieldP1:
    """Plain nodal sampling at every lattice node, centres included."""
    u = _scalar_source(src)
    values = np.asarray(
        u(mesh.node_xy[:, 0], mesh.node_xy[:, 1]), dtype=float
    ).copy()
    return FieldP1(mesh=mesh, values=values)
