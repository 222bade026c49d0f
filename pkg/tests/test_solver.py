"""Solver contracts: CG and the direct factorization agree, CG energy
decreases monotonically, and failure to converge raises."""

import numpy as np
import pytest
import scipy.sparse as sp

from hivevem.solver import SolverConfig, SolverError, solve
from hivevem.system import SparseSpd, assemble


def random_spd(n, seed=0):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    M = B @ B.T + n * np.eye(n)
    return SparseSpd(sp.csr_matrix(M))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(method="lu")
    with pytest.raises(ValueError):
        SolverConfig(tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(tol=1e-3)  # too loose for this problem class
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(preconditioner="ssor")


def test_direct_matches_numpy_on_a_small_spd_system():
    A = random_spd(8, seed=1)
    rng = np.random.default_rng(2)
    b = rng.normal(size=8)
    x, stats = solve(A, b, SolverConfig(method="chol"))
    want = np.linalg.solve(A.to_csr().toarray(), b)
    assert np.allclose(x, want, atol=1e-12)
    assert stats.converged and stats.method == "chol"


@pytest.mark.parametrize("preconditioner", ["none", "jacobi", "incomplete-cholesky"])
def test_cg_matches_direct(preconditioner, mesh_cache, hex_sine):
    A, b, _ = assemble(mesh_cache(4), hex_sine)
    x_cg, stats = solve(
        A, b, SolverConfig(method="cg", preconditioner=preconditioner)
    )
    x_direct, _ = solve(A, b, SolverConfig(method="chol"))
    assert np.max(np.abs(x_cg - x_direct)) <= 1e-10
    assert stats.converged
    assert stats.iterations <= A.n


def test_cg_energy_is_monotone(mesh_cache, hex_sine):
    A, b, _ = assemble(mesh_cache(4), hex_sine)
    _, stats = solve(A, b, SolverConfig(method="cg"))
    e = np.asarray(stats.energies)
    assert e.size == stats.iterations
    assert np.all(np.diff(e) <= 1e-12 * np.abs(e[:-1]))


def test_cg_backward_stable_residual(mesh_cache, hex_sine):
    A, b, _ = assemble(mesh_cache(5), hex_sine)
    x, stats = solve(A, b, SolverConfig(method="cg", tol=1e-14))
    scale = (
        np.max(np.abs(A.data)) * np.max(np.abs(x)) + np.max(np.abs(b))
    )
    assert np.max(np.abs(A.matvec(x) - b)) <= 1e-12 * scale
    assert stats.recurrence_residual <= 1e-14
    assert stats.residual < 1e-8  # recomputed, floor ~ eps/h^2


def test_cg_iteration_budget_raises(mesh_cache, hex_sine):
    A, b, _ = assemble(mesh_cache(4), hex_sine)
    with pytest.raises(SolverError):
        solve(A, b, SolverConfig(method="cg", max_iterations=2))


def test_zero_rhs_short_circuits():
    A = random_spd(5)
    x, stats = solve(A, np.zeros(5), SolverConfig(method="cg"))
    assert np.all(x == 0) and stats.iterations == 0 and stats.converged


def test_empty_system():
    A = SparseSpd(sp.csr_matrix((0, 0)))
    x, stats = solve(A, np.zeros(0))
    assert x.size == 0 and stats.converged


def test_rhs_shape_check():
    A = random_spd(5)
    with pytest.raises(ValueError):
        solve(A, np.zeros(6))


def test_solves_are_deterministic(mesh_cache, hex_sine):
    A, b, _ = assemble(mesh_cache(4), hex_sine)
    x1, s1 = solve(A, b, SolverConfig(method="cg"))
    x2, s2 = solve(A, b, SolverConfig(method="cg"))
    assert np.array_equal(x1, x2)
    assert s1.iterations == s2.iterations
