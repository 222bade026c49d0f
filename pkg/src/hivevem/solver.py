"""Linear solvers for the condensed SPD system.

Two methods: preconditioned conjugate gradients (the default, with a
Jacobi preconditioner) and a sparse direct factorisation.  Both are
deterministic for a fixed configuration.

A note on tolerances.  CG stops when the recurrence residual satisfies
``norm(r) <= tol * norm(b)``, the standard criterion.  At fine levels
the *recomputed* residual ``b - A x`` cannot drop to ``tol * norm(b)``
in double precision no matter the solver: evaluating ``A x`` for the
smooth solution of a stiffness system cancels by a factor of order
``1/h**2``, which puts a floor of roughly ``eps / h**2`` on the
measurable relative residual.  The recomputed value is therefore
reported in the statistics rather than enforced; the backward-stable
check ``max|A x - b| <= tol * (norm_inf(A) norm_inf(x) + norm_inf(b))``
is the meaningful post-condition and is what the test-suite asserts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .system import SparseSpd

METHODS = ("cg", "chol")
PRECONDITIONERS = ("none", "jacobi", "incomplete-cholesky")


class SolverError(RuntimeError):
    """Raised when a solve does not meet its convergence contract."""


@dataclass(frozen=True)
class SolverConfig:
    """Validated solver settings.

    ``max_iterations=None`` selects ``max(2n, 200)``, which always
    covers the finite-termination bound of CG; an explicit value is
    used as given.
    """

    method: str = "cg"
    tol: float = 1e-14
    max_iterations: int | None = None
    preconditioner: str = "jacobi"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (0.0 < self.tol <= 1e-6):
            raise ValueError(f"tol must lie in (0, 1e-6], got {self.tol}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(
                f"preconditioner must be one of {PRECONDITIONERS}, "
                f"got {self.preconditioner!r}"
            )


@dataclass
class SolveStats:
    method: str
    iterations: int
    residual: float              # recomputed |b - Ax| / |b|
    recurrence_residual: float   # CG recurrence value at termination
    converged: bool
    energies: list = field(default_factory=list)


def solve(A: SparseSpd, b: np.ndarray, config: SolverConfig | None = None):
    """Solve ``A x = b``; returns ``(x, stats)``.

    Raises :class:`SolverError` if CG fails to converge within its
    iteration budget.
    """
    if config is None:
        config = SolverConfig()
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({A.n},)")

    if A.n == 0:
        return np.zeros(0), SolveStats(config.method, 0, 0.0, 0.0, True)

    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(A.n), SolveStats(config.method, 0, 0.0, 0.0, True)

    if config.method == "chol":
        return _solve_direct(A, b, config, bnorm)
    return _solve_cg(A, b, config, bnorm)


def _make_preconditioner(A: SparseSpd, kind: str):
    if kind == "none":
        return lambda r: r
    if kind == "jacobi":
        inv_diag = 1.0 / A.diagonal()
        return lambda r: inv_diag * r
    L = _ichol0(A.to_csr())
    Lt = L.T.tocsr()

    def apply(r):
        y = spla.spsolve_triangular(L, r, lower=True)
        return spla.spsolve_triangular(Lt, y, lower=False)

    return apply


def _ichol0(A: sp.csr_matrix) -> sp.csr_matrix:
    """Zero fill-in incomplete Cholesky factor L with A ~ L L^T."""
    n = A.shape[0]
    lower = {}  # row -> {col: value}, cols < row only
    diag = np.zeros(n)
    indptr, indices, data = A.indptr, A.indices, A.data
    for i in range(n):
        row = {}
        aii = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j < i:
                row[j] = data[p]
            elif j == i:
                aii = data[p]
        for k in sorted(row):
            lk = lower[k]
            v = row[k]
            for j, lkj in lk.items():
                if j in row and j < k:
                    v -= row[j] * lkj
            v /= diag[k]
            row[k] = v
            aii -= v * v
        if aii <= 0.0:
            raise SolverError(f"incomplete Cholesky broke down at row {i}")
        diag[i] = np.sqrt(aii)
        lower[i] = row
    rows, cols, vals = [], [], []
    for i in range(n):
        for j, v in sorted(lower[i].items()):
            rows.append(i)
            cols.append(j)
            vals.append(v)
        rows.append(i)
        cols.append(i)
        vals.append(diag[i])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _solve_cg(A: SparseSpd, b, config: SolverConfig, bnorm: float):
    n = A.n
    maxit = config.max_iterations or max(2 * n, 200)
    apply_m = _make_preconditioner(A, config.preconditioner)

    x = np.zeros(n)
    r = b.copy()
    z = apply_m(r)
    p = z.copy()
    rz = float(r @ z)
    energies = []
    rnorm = bnorm
    iterations = 0
    for iterations in range(1, maxit + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        # 0.5 x'Ax - b'x expressed through the recurrence residual.
        energies.append(-0.5 * float(x @ (b + r)))
        rnorm = float(np.linalg.norm(r))
        if rnorm <= config.tol * bnorm:
            break
        z = apply_m(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    true_res = float(np.linalg.norm(b - A @ x)) / bnorm
    converged = rnorm <= config.tol * bnorm
    if not converged:
        raise SolverError(
            f"CG did not converge in {maxit} iterations: "
            f"recurrence residual {rnorm / bnorm:.3e}, "
            f"recomputed residual {true_res:.3e} (tol {config.tol:.1e})"
        )
    stats = SolveStats(
        method="cg",
        iterations=iterations,
        residual=true_res,
        recurrence_residual=rnorm / bnorm,
        converged=True,
        energies=energies,
    )
    return x, stats


def _solve_direct(A: SparseSpd, b, config: SolverConfig, bnorm: float):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp.SparseEfficiencyWarning)
        lu = spla.splu(A.to_csc(), permc_spec="MMD_AT_PLUS_A")
    x = lu.solve(b)
    refinements = 0
    res = b - A @ x
    rel = float(np.linalg.norm(res)) / bnorm
    while rel > config.tol and refinements < 2:
        x = x + lu.solve(res)
        refinements += 1
        res = b - A @ x
        new_rel = float(np.linalg.norm(res)) / bnorm
        if new_rel >= rel:
            break
        rel = new_rel
    if not np.all(np.isfinite(x)) or rel > 1e-8:
        raise SolverError(f"direct solve failed: relative residual {rel:.3e}")
    stats = SolveStats(
        method="chol",
        iterations=refinements,
        residual=rel,
        recurrence_residual=rel,
        converged=True,
    )
    return x, stats
