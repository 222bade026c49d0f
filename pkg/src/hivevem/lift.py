"""Patchwise cubic lift of the honeycomb solution.

From level 3 on, the domain is tiled by equilateral patches whose edge
is four hexagon edges ``L = 4s``: each of the six sextant triangles of
the hexagon is subdivided uniformly into ``4**(level-3)`` patches of
both orientations.  A patch contains 16 subtriangles and carries the 15
lattice sites of its degree-4 principal lattice; exactly one of its
three corners is of the hexagon-centre class.

On every patch a full bivariate cubic (10 coefficients) is fitted by
least squares to solution data at a scheme-dependent subset of the 15
sites.  Fits use a scaled local frame, origin at the patch centroid and
coordinates divided by L, so design matrices stay well conditioned
uniformly in the level.

Data schemes
------------
``lattice15-corrected`` (default)
    All 15 sites.  Mesh vertices carry nodal solution values; interior
    hexagon centres carry the centre value plus ``(s**2/4) * f``, which
    cancels the second-order gap between a centre value (the mean of
    the six corners) and the underlying smooth function.  The corrected
    data is fourth-order accurate, and the site set always determines a
    cubic uniquely.
``paper11-plain`` / ``paper11-corrected``
    The mesh vertices of the patch plus its centre-class corner, data
    plain or corrected; the smallest site set with a provable rank.
``vertices-only-minnorm``
    Mesh vertices only, minimum-norm solution; on patches with no
    boundary sites the design matrix is rank deficient and the fit is a
    diagnostic, not an approximation.
``oracle-center``
    All 15 sites with exact solution values at the centres; isolates
    the effect of the centre-data correction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .lattice import HoneycombMesh, position
from .problem import ManufacturedProblem
from .system import FieldP1

SCHEMES = (
    "lattice15-corrected",
    "paper11-plain",
    "paper11-corrected",
    "vertices-only-minnorm",
    "oracle-center",
)

MIN_LIFT_LEVEL = 3

#: Exponent pairs of the cubic monomial basis, constant term first.
MONOMIAL_POWERS = (
    (0, 0), (1, 0), (0, 1),
    (2, 0), (1, 1), (0, 2),
    (3, 0), (2, 1), (1, 2), (0, 3),
)

#: Local (a, b) lattice coordinates of the 15 patch sites.
_SITE_AB = tuple((a, b) for a in range(5) for b in range(5 - a))

#: Site ids of the three patch corners within ``_SITE_AB``.
_CORNER_SITES = (0, 4, 14)


class UnsupportedLevelError(ValueError):
    """Patch grids only exist from level 3 on."""


class LiftRankError(RuntimeError):
    """A scheme that requires a determined fit met a deficient matrix."""


class RankDeficientFitWarning(UserWarning):
    """Diagnostic warning for minimum-norm fits with deficient rank."""


@dataclass(frozen=True)
class Patch:
    """One equilateral patch of the lift grid."""

    index: int
    corners_ij: np.ndarray       # (3, 2) lattice coordinates
    orientation: str             # "up": aligned with its sextant
    tri_indices: np.ndarray      # (16,) subtriangle indices
    site_nodes: np.ndarray       # (15,) node indices
    site_is_center: np.ndarray   # (15,) interior-centre flags
    site_xy: np.ndarray          # (15, 2)
    centroid: np.ndarray         # (2,)
    edge: float                  # L = 4 s
    c0_corner_site: int          # site id of the centre-class corner


@dataclass
class PatchGrid:
    mesh: HoneycombMesh
    level: int
    edge: float
    patches: list[Patch]
    tri_to_patch: np.ndarray

    @property
    def n_patches(self) -> int:
        return len(self.patches)


def _sextant_corners(n: int) -> list[tuple[int, int]]:
    return [(n, 0), (0, n), (-n, n), (-n, 0), (0, -n), (n, -n)]


def build_patch_grid(mesh: HoneycombMesh) -> PatchGrid:
    """Build the lift patch grid of a mesh of level >= 3.

    Patches are emitted sextant by sextant, aligned ("up") rows first,
    which fixes the tie-breaking order used by point location.
    """
    if mesh.level < MIN_LIFT_LEVEL:
        raise UnsupportedLevelError(
            f"patch grid needs level >= {MIN_LIFT_LEVEL}, got {mesh.level}"
        )
    n = mesh.n
    m = 2 ** (mesh.level - MIN_LIFT_LEVEL)  # patches per sextant edge
    edge = 4.0 * mesh.s
    domain = _sextant_corners(n)
    tri_lookup = mesh.tri_lookup()
    cls0 = (mesh.node_ij[:, 0] - mesh.node_ij[:, 1]) % 3 == 0

    patches: list[Patch] = []
    tri_to_patch = -np.ones(mesh.n_tris, dtype=np.int64)

    def emit(c0, e1, e2, orientation):
        index = len(patches)
        corners = np.array([c0, c0 + 4 * e1, c0 + 4 * e2])
        site_nodes = np.empty(15, dtype=np.int64)
        for sid, (a, b) in enumerate(_SITE_AB):
            p = c0 + a * e1 + b * e2
            node = mesh.node_index(int(p[0]), int(p[1]))
            if node < 0:
                raise RuntimeError(f"patch site {tuple(p)} outside domain")
            site_nodes[sid] = node
        tri_ids = np.empty(16, dtype=np.int64)
        t = 0
        for a in range(4):
            for b in range(4 - a):
                base = c0 + a * e1 + b * e2
                tri_ids[t] = _find_tri(tri_lookup, mesh, base, base + e1, base + e2)
                t += 1
        for a in range(3):
            for b in range(3 - a):
                base = c0 + a * e1 + b * e2
                tri_ids[t] = _find_tri(
                    tri_lookup, mesh, base + e1, base + e2, base + e1 + e2
                )
                t += 1
        if np.any(tri_to_patch[tri_ids] >= 0):
            raise RuntimeError("patch tiling overlap")
        tri_to_patch[tri_ids] = index

        corner_classes = [
            int(cls0[site_nodes[sid]]) for sid in _CORNER_SITES
        ]
        if sum(corner_classes) != 1:
            raise RuntimeError("patch without unique centre-class corner")
        c0_site = _CORNER_SITES[corner_classes.index(1)]

        site_xy = mesh.node_xy[site_nodes]
        patches.append(Patch(
            index=index,
            corners_ij=corners,
            orientation=orientation,
            tri_indices=tri_ids,
            site_nodes=site_nodes,
            site_is_center=mesh.is_center[site_nodes].copy(),
            site_xy=site_xy,
            centroid=site_xy[list(_CORNER_SITES)].mean(axis=0),
            edge=edge,
            c0_corner_site=c0_site,
        ))

    for k in range(6):
        A = np.array(domain[k])
        B = np.array(domain[(k + 1) % 6])
        e1 = A // m // 4
        e2 = B // m // 4
        u = 4 * e1
        v = 4 * e2
        for a in range(m):
            for b in range(m - a):
                emit(a * u + b * v, e1, e2, "up")
        for a in range(m - 1):
            for b in range(m - 1 - a):
                emit(a * u + b * v + u, e2 - e1, e2, "down")

    if np.any(tri_to_patch < 0):
        raise RuntimeError("patch tiling does not cover the submesh")
    return PatchGrid(
        mesh=mesh, level=mesh.level, edge=edge,
        patches=patches, tri_to_patch=tri_to_patch,
    )


def _find_tri(tri_lookup, mesh, p, q, r):
    key = tuple(sorted(
        mesh.node_index(int(v[0]), int(v[1])) for v in (p, q, r)
    ))
    try:
        return tri_lookup[key]
    except KeyError:
        raise RuntimeError(f"patch subtriangle {key} missing from mesh") from None


def scheme_sites(patch: Patch, scheme: str) -> np.ndarray:
    """Site ids (into the patch's 15) used by a data scheme."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown lift scheme {scheme!r}; available: {SCHEMES}")
    if scheme in ("lattice15-corrected", "oracle-center"):
        return np.arange(15)
    vertex = ~patch.site_is_center
    if scheme == "vertices-only-minnorm":
        return np.flatnonzero(vertex)
    mask = vertex.copy()
    mask[patch.c0_corner_site] = True
    return np.flatnonzero(mask)


@dataclass(frozen=True)
class CubicFit:
    """Least-squares cubic on one patch, in the scaled local frame.

    ``coeffs`` follow :data:`MONOMIAL_POWERS` applied to
    ``X = (x - center_x)/scale``, ``Y = (y - center_y)/scale``.
    """

    coeffs: np.ndarray
    center: np.ndarray
    scale: float
    rank: int
    sigma_min: float
    residual: float

    def __call__(self, xy: np.ndarray) -> np.ndarray:
        return _design_matrix(np.atleast_2d(xy), self.center, self.scale) @ self.coeffs

    def gradient(self, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(xy)
        X = (xy[:, 0] - self.center[0]) / self.scale
        Y = (xy[:, 1] - self.center[1]) / self.scale
        gx = np.zeros_like(X)
        gy = np.zeros_like(Y)
        for coef, (p, q) in zip(self.coeffs, MONOMIAL_POWERS):
            if p:
                gx += coef * p * X ** (p - 1) * Y ** q
            if q:
                gy += coef * q * X ** p * Y ** (q - 1)
        return np.stack([gx, gy], axis=-1) / self.scale


def _design_matrix(xy: np.ndarray, center: np.ndarray, scale: float) -> np.ndarray:
    X = (xy[:, 0] - center[0]) / scale
    Y = (xy[:, 1] - center[1]) / scale
    return np.stack([X ** p * Y ** q for p, q in MONOMIAL_POWERS], axis=1)


def fit_patch(patch: Patch, data: np.ndarray, scheme: str) -> CubicFit:
    """Fit the patch cubic to ``data`` given at the scheme's sites.

    Data must be ordered like :func:`scheme_sites`.  Schemes other than
    ``vertices-only-minnorm`` require full rank and raise
    :class:`LiftRankError` otherwise; the min-norm scheme downgrades
    the condition to a :class:`RankDeficientFitWarning`.
    """
    sites = scheme_sites(patch, scheme)
    data = np.asarray(data, dtype=float)
    if data.shape != sites.shape:
        raise ValueError(
            f"expected {sites.size} data values for scheme {scheme!r}, "
            f"got {data.shape}"
        )
    A = _design_matrix(patch.site_xy[sites], patch.centroid, patch.edge)
    coeffs, _, rank, sv = np.linalg.lstsq(A, data, rcond=None)
    if rank < 10:
        if scheme == "vertices-only-minnorm":
            warnings.warn(
                f"patch {patch.index}: design matrix rank {rank} < 10, "
                "minimum-norm fit",
                RankDeficientFitWarning,
                stacklevel=2,
            )
        else:
            raise LiftRankError(
                f"patch {patch.index}: design matrix rank {rank} < 10 "
                f"under scheme {scheme!r}"
            )
    return CubicFit(
        coeffs=coeffs,
        center=patch.centroid.copy(),
        scale=patch.edge,
        rank=int(rank),
        sigma_min=float(sv[-1]) if sv.size else 0.0,
        residual=float(np.linalg.norm(A @ coeffs - data)),
    )


@dataclass
class LiftResult:
    """Per-patch cubic fits of one lifted solution."""

    grid: PatchGrid
    scheme: str
    fits: list[CubicFit]


def site_data(
    u_h: FieldP1,
    problem: ManufacturedProblem,
    patch: Patch,
    scheme: str,
) -> np.ndarray:
    """Fit data at the scheme's sites of one patch."""
    mesh = u_h.mesh
    sites = scheme_sites(patch, scheme)
    nodes = patch.site_nodes[sites]
    vals = u_h.values[nodes].copy()
    center_sel = patch.site_is_center[sites]
    if np.any(center_sel):
        xy = patch.site_xy[sites][center_sel]
        if scheme == "oracle-center":
            vals[center_sel] = problem.u(xy[:, 0], xy[:, 1])
        elif scheme.endswith("-corrected"):
            vals[center_sel] += 0.25 * mesh.s ** 2 * problem.f(xy[:, 0], xy[:, 1])
    return vals


def lift_solution(
    u_h: FieldP1,
    problem: ManufacturedProblem,
    grid: PatchGrid,
    scheme: str = "lattice15-corrected",
) -> LiftResult:
    """Fit the cubic lift on every patch of the grid."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown lift scheme {scheme!r}; available: {SCHEMES}")
    if u_h.mesh is not grid.mesh:
        raise ValueError("solution and patch grid live on different meshes")
    fits = [
        fit_patch(patch, site_data(u_h, problem, patch, scheme), scheme)
        for patch in grid.patches
    ]
    return LiftResult(grid=grid, scheme=scheme, fits=fits)


def locate_patch(grid: PatchGrid, point) -> int:
    """Index of the patch containing a point; lowest index on ties."""
    point = np.asarray(point, dtype=float)
    for patch in grid.patches:
        tri = position(patch.corners_ij, grid.mesh.s)
        if _bary_inside(tri, point):
            return patch.index
    raise ValueError(f"point {tuple(point)} lies outside the domain")


def _bary_inside(tri: np.ndarray, p: np.ndarray, tol: float = 1e-12) -> bool:
    T = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    lam12 = np.linalg.solve(T, p - tri[0])
    lam = np.array([1.0 - lam12.sum(), lam12[0], lam12[1]])
    return bool(np.all(lam >= -tol))


def evaluate_lift(result: LiftResult, point):
    """Lift value and gradient at one point: ``(value, (gx, gy))``."""
    idx = locate_patch(result.grid, point)
    fit = result.fits[idx]
    xy = np.asarray(point, dtype=float)[None, :]
    return float(fit(xy)[0]), fit.gradient(xy)[0]
