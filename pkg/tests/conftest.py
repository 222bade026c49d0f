"""Shared fixtures: meshes and solved fields are cached per session."""

import numpy as np
import pytest

from hivevem.lattice import build_mesh
from hivevem.problem import get_problem
from hivevem.solver import SolverConfig, solve
from hivevem.system import assemble, expand


@pytest.fixture(scope="session")
def mesh_cache():
    cache = {}

    def get(level):
        if level not in cache:
            cache[level] = build_mesh(level)
        return cache[level]

    return get


@pytest.fixture(scope="session")
def solved_cache(mesh_cache):
    """level -> (mesh, u_h, dofs, stats) for hex-sine, direct solver."""
    cache = {}

    def get(level):
        if level not in cache:
            problem = get_problem("hex-sine")
            mesh = mesh_cache(level)
            A, b, dofs = assemble(mesh, problem)
            x, stats = solve(A, b, SolverConfig(method="chol"))
            cache[level] = (mesh, expand(x, dofs, mesh), dofs, stats)
        return cache[level]

    return get


@pytest.fixture(scope="session")
def hex_sine():
    return get_problem("hex-sine")
