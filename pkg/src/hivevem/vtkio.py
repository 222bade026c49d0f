"""Legacy ASCII VTK output of meshes and nodal fields.

Writes version-3.0 unstructured grids: lattice nodes as 3D points with
z = 0, subtriangles as cells of type 5 (VTK_TRIANGLE), and optional
point-data scalars in float64.  Files use Unix newlines and a fixed
float format, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import numpy as np

from .lattice import HoneycombMesh

VTK_TRIANGLE = 5


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_vtk(
    mesh: HoneycombMesh,
    path,
    point_data: dict[str, np.ndarray] | None = None,
    title: str = "honeycomb mesh",
) -> None:
    """Write the triangular submesh, optionally with nodal scalars."""
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    for x, y in mesh.node_xy:
        lines.append(f"{_fmt(x)} {_fmt(y)} 0")
    lines.append(f"CELLS {mesh.n_tris} {4 * mesh.n_tris}")
    for a, b, c in mesh.tris:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.n_tris}")
    lines.extend([str(VTK_TRIANGLE)] * mesh.n_tris)
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (mesh.n_nodes,):
                raise ValueError(
                    f"point data {name!r} has shape {values.shape}, "
                    f"expected ({mesh.n_nodes},)"
                )
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in values)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
