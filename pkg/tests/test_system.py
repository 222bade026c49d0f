"""Assembly checked against dense re-computation and hand geometry.

The condensed matrix is rebuilt densely here as C^T K C from scratch
(numpy only) and compared entry for entry, and the centre recovery is
checked by its exactness on cubics.
"""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from hivevem.lattice import build_mesh
from hivevem.problem import _from_expression, get_problem, hex_sine
from hivevem.quadrature import integrate, rule
from hivevem.solver import SolverConfig, solve
from hivevem.system import (
    FieldP1,
    SparseSpd,
    assemble,
    build_dof_map,
    element_stiffness,
    expand,
    interpolate,
    interpolate_pointwise,
    load_vector,
    p1_gradients,
    prolongation,
    recover_centers,
    restrict,
)

SQRT3 = math.sqrt(3.0)


def cubic_problem():
    return _from_expression(
        "cubic",
        lambda X, Y: 0.3 + X - 0.5 * Y + X * Y + 0.25 * X * X - Y * Y
        + 0.1 * X ** 3 - 0.2 * X * X * Y + 0.15 * X * Y * Y + 0.05 * Y ** 3,
    )


# --------------------------------------------------------------- stiffness


@pytest.mark.parametrize("s", [1.0, 0.25, 2.0 ** -6])
def test_element_stiffness_frozen_values(s):
    ke = element_stiffness(s)
    want = np.full((3, 3), -0.5 / SQRT3)
    np.fill_diagonal(want, 1.0 / SQRT3)
    assert np.allclose(ke, want, atol=1e-14)


def test_element_stiffness_from_scratch():
    """Gradients solved from the linear system phi_i(v_j) = delta_ij."""
    s = 0.5
    verts = np.array([[0.2, -0.1],
                      [0.2 + s, -0.1],
                      [0.2 + 0.5 * s, -0.1 + 0.5 * SQRT3 * s]])
    V = np.column_stack([np.ones(3), verts])  # phi = a + b x + c y
    coeff = np.linalg.solve(V, np.eye(3))
    grads = coeff[1:, :].T  # (3, 2)
    area = SQRT3 / 4 * s * s
    ke = area * grads @ grads.T
    assert np.allclose(ke, element_stiffness(s), atol=1e-14)


def test_element_stiffness_rejects_bad_edge():
    with pytest.raises(ValueError):
        element_stiffness(0.0)
    with pytest.raises(ValueError):
        element_stiffness(-1.0)


def test_p1_gradients_duality():
    rng = np.random.default_rng(7)
    tri = rng.normal(size=(1, 3, 2))
    # enforce counterclockwise
    d1 = tri[0, 1] - tri[0, 0]
    d2 = tri[0, 2] - tri[0, 0]
    if d1[0] * d2[1] - d1[1] * d2[0] < 0:
        tri = tri[:, [0, 2, 1]]
    grads, area = p1_gradients(tri)
    assert area[0] > 0
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            step = tri[0, i] - tri[0, j]
            assert grads[0, i] @ step == pytest.approx(1.0, rel=1e-12)


# ------------------------------------------------------------------- dofs


@pytest.mark.parametrize("level, n_dofs", [(1, 0), (2, 6), (3, 24), (4, 114)])
def test_dof_counts(level, n_dofs, mesh_cache):
    mesh = mesh_cache(level)
    dofs = build_dof_map(mesh)
    assert dofs.n_dofs == n_dofs
    assert dofs.n_boundary == 6 * mesh.n
    assert dofs.n_centers == mesh.centers.size
    assert dofs.n_dofs + dofs.n_boundary + dofs.n_centers == mesh.n_nodes
    # roundtrip
    assert np.array_equal(
        dofs.node_to_dof[dofs.dof_to_node], np.arange(n_dofs)
    )


def test_expand_places_sixths_at_centers(mesh_cache):
    mesh = mesh_cache(2)
    dofs = build_dof_map(mesh)
    x = np.zeros(dofs.n_dofs)
    x[0] = 1.0
    field = expand(x, dofs, mesh)
    node = dofs.dof_to_node[0]
    assert field.values[node] == 1.0
    # level 2 has a single centre whose six corners are the six dofs
    c = mesh.centers[0]
    assert field.values[c] == pytest.approx(1.0 / 6.0, rel=1e-15)
    assert field.constraint_gap() <= 1e-15
    assert np.array_equal(restrict(field, dofs), x)


def test_expand_validates_length(mesh_cache):
    mesh = mesh_cache(2)
    dofs = build_dof_map(mesh)
    with pytest.raises(ValueError):
        expand(np.zeros(dofs.n_dofs + 1), dofs, mesh)


def test_prolongation_rows(mesh_cache):
    mesh = mesh_cache(3)
    dofs = build_dof_map(mesh)
    C = prolongation(mesh, dofs)
    assert C.shape == (mesh.n_nodes, dofs.n_dofs)
    dense = C.toarray()
    assert np.all(dense[mesh.on_boundary] == 0)
    for k, node in enumerate(dofs.dof_to_node):
        row = dense[node]
        assert row[k] == 1.0 and np.count_nonzero(row) == 1
    for c, ring in zip(mesh.centers, mesh.center_corners):
        row = dense[c]
        free = dofs.node_to_dof[ring] >= 0
        assert np.count_nonzero(row) == int(free.sum())
        assert np.all(row[row != 0] == pytest.approx(1.0 / 6.0))


# --------------------------------------------------------------- assembly


@pytest.mark.parametrize("level", [2, 3])
def test_condensed_matrix_against_dense_rebuild(level, mesh_cache, hex_sine):
    mesh = mesh_cache(level)
    A, b, dofs = assemble(mesh, hex_sine)

    ke = element_stiffness(mesh.s)
    K = np.zeros((mesh.n_nodes, mesh.n_nodes))
    for tri in mesh.tris:
        for a in range(3):
            for bb in range(3):
                K[tri[a], tri[bb]] += ke[a, bb]
    C = np.zeros((mesh.n_nodes, dofs.n_dofs))
    for k, node in enumerate(dofs.dof_to_node):
        C[node, k] = 1.0
    for c, ring in zip(mesh.centers, mesh.center_corners):
        for r in ring:
            if dofs.node_to_dof[r] >= 0:
                C[c, dofs.node_to_dof[r]] = 1.0 / 6.0
    want = C.T @ K @ C
    assert np.allclose(A.to_csr().toarray(), want, atol=1e-13)

    # load against per-triangle quadrature
    q = rule(4)
    load = np.zeros(mesh.n_nodes)
    for t, tri in enumerate(mesh.tris):
        xy = mesh.node_xy[tri]
        for k in range(3):
            def g(x, y, k=k, xy=xy):
                V = np.column_stack([np.ones(3), xy])
                coef = np.linalg.solve(V, np.eye(3))[:, k]
                return hex_sine.f(x, y) * (coef[0] + coef[1] * x + coef[2] * y)
            load[tri[k]] += integrate(xy, g, q)
    assert np.allclose(b, (C.T @ load), atol=1e-13)


def test_matrix_is_spd(mesh_cache, hex_sine):
    A, _, _ = assemble(mesh_cache(3), hex_sine)
    dense = A.to_csr().toarray()
    eigs = np.linalg.eigvalsh(dense)
    assert eigs.min() > 0
    assert np.allclose(dense, dense.T, atol=1e-15)


def test_sparsespd_rejects_asymmetry():
    M = sp.csr_matrix(np.array([[2.0, 1.0], [0.5, 2.0]]))
    with pytest.raises(ValueError):
        SparseSpd(M)
    with pytest.raises(ValueError):
        SparseSpd(sp.csr_matrix(np.ones((2, 3))))


def test_sparsespd_matvec_and_diagonal(mesh_cache, hex_sine):
    A, _, _ = assemble(mesh_cache(3), hex_sine)
    rng = np.random.default_rng(3)
    x = rng.normal(size=A.n)
    assert np.allclose(A.matvec(x), A.to_csr() @ x, atol=1e-15)
    assert np.allclose(A @ x, A.matvec(x), atol=0)
    assert np.allclose(A.diagonal(), A.to_csr().diagonal(), atol=0)


def test_level1_system_is_empty(mesh_cache, hex_sine):
    A, b, dofs = assemble(mesh_cache(1), hex_sine)
    assert dofs.n_dofs == 0 and A.n == 0 and b.size == 0
    field = expand(np.zeros(0), dofs, mesh_cache(1))
    assert np.max(np.abs(field.values)) == 0.0


def test_load_vector_partition_of_unity(mesh_cache):
    """Sum of the P1 load of f = 1 is the domain area."""
    poisson_one = _from_expression("one", lambda X, Y: -0.25 * (X * X + Y * Y))
    mesh = mesh_cache(3)
    load = load_vector(mesh, poisson_one, degree=2)
    assert load.sum() == pytest.approx(1.5 * SQRT3, rel=1e-13)


def test_fan_energy_minimizer_is_the_corner_mean():
    """Minimizing the six-triangle fan energy over the centre value
    gives the plain corner average; the fan diagonal is 2*sqrt(3)."""
    ke = element_stiffness(0.25)
    rng = np.random.default_rng(11)
    corners = rng.normal(size=6)
    # assemble the 7-node fan: node 6 is the centre
    K = np.zeros((7, 7))
    for t in range(6):
        idx = [t, (t + 1) % 6, 6]
        for a in range(3):
            for b in range(3):
                K[idx[a], idx[b]] += ke[a, b]
    assert K[6, 6] == pytest.approx(2.0 * SQRT3, rel=1e-14)
    best = -K[6, :6] @ corners / K[6, 6]
    assert best == pytest.approx(corners.mean(), rel=1e-12)


def test_galerkin_residual(solved_cache):
    mesh, u_h, dofs, _ = solved_cache(4)
    problem = get_problem("hex-sine")
    A, b, _ = assemble(mesh, problem)
    r = b - A.matvec(restrict(u_h, dofs))
    assert np.max(np.abs(r)) <= 1e-13 * max(np.max(np.abs(b)), 1.0)
    assert u_h.constraint_gap() <= 1e-14


# ---------------------------------------------------------- interpolation


def test_interpolate_constrains_centers(mesh_cache, hex_sine):
    mesh = mesh_cache(3)
    u_i = interpolate(hex_sine, mesh)
    u_pw = interpolate_pointwise(hex_sine, mesh)
    assert u_i.constraint_gap() <= 1e-15
    verts = ~mesh.is_center
    assert np.array_equal(u_i.values[verts], u_pw.values[verts])
    exact = hex_sine.u(mesh.node_xy[:, 0], mesh.node_xy[:, 1])
    assert np.allclose(u_pw.values, exact, atol=1e-15)
    # centre means differ from exact centre values at O(h^2)
    gap = np.max(np.abs(u_i.values[mesh.centers] - exact[mesh.centers]))
    assert 1e-4 < gap < 1e-1


# --------------------------------------------------------- centre recovery


def test_recover_centers_is_exact_on_cubics(mesh_cache):
    """mean(corners) + l_c/(2 sqrt 3) undoes the O(h^2) centre bias of
    the constrained interpolant exactly for cubic solutions."""
    problem = cubic_problem()
    mesh = mesh_cache(3)
    u_i = interpolate(problem, mesh)
    rec = recover_centers(u_i, problem, load_quad_degree=4)
    exact = problem.u(mesh.node_xy[:, 0], mesh.node_xy[:, 1])
    assert np.allclose(rec.values[mesh.centers], exact[mesh.centers], atol=1e-13)
    # vertex values untouched
    verts = ~mesh.is_center
    assert np.array_equal(rec.values[verts], u_i.values[verts])


def test_recover_centers_fourth_order(solved_cache):
    problem = get_problem("hex-sine")
    errs = []
    for level in (4, 5, 6):
        mesh, u_h, dofs, _ = solved_cache(level)
        rec = recover_centers(u_h, problem)
        exact = problem.u(mesh.node_xy[:, 0], mesh.node_xy[:, 1])
        errs.append(np.max(np.abs(rec.values[mesh.centers] - exact[mesh.centers])))
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(rates) > 3.5


def test_recover_centers_beats_the_plain_average(solved_cache):
    mesh, u_h, dofs, _ = solved_cache(5)
    problem = get_problem("hex-sine")
    rec = recover_centers(u_h, problem)
    exact = problem.u(mesh.node_xy[:, 0], mesh.node_xy[:, 1])
    plain = np.max(np.abs(u_h.values[mesh.centers] - exact[mesh.centers]))
    fixed = np.max(np.abs(rec.values[mesh.centers] - exact[mesh.centers]))
    assert fixed < 0.01 * plain
