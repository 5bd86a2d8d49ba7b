"""Legacy ASCII VTK output for triangle meshes with scalar point data."""
from __future__ import annotations

import numpy as np

from .femspace import FeFunction
from .mesh import Mesh

VTK_TRIANGLE = 5
_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _is_continuous(f) -> bool:
    return isinstance(f, FeFunction) and f.space.family == "CG"


def write_vtk(path, mesh: Mesh, fields: dict, title: str = "sisg output") -> None:
    """Write ``fields`` (name -> FE function or Derivative) at element vertices.

    When every field is continuous, vertices are shared.  Otherwise each
    element gets its own three points so jumps between elements survive.
    Only vertex values are written; higher-order fields are shown linearly.
    """
    shared = all(_is_continuous(f) for f in fields.values())
    if shared:
        points = mesh.vertices
        cells = mesh.triangles
        data = {name: f.coeffs[:mesh.n_vertices] for name, f in fields.items()}
    else:
        points = mesh.vertices[mesh.triangles].reshape(-1, 2)
        cells = np.arange(3 * mesh.n_triangles).reshape(-1, 3)
        data = {name: f.values_at(_CORNERS).reshape(-1) for name, f in fields.items()}

    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {len(points)} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in points]
    lines.append(f"CELLS {len(cells)} {4 * len(cells)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += [str(VTK_TRIANGLE)] * len(cells)
    if data:
        lines.append(f"POINT_DATA {len(points)}")
        for name, vals in data.items():
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [f"{v:.17g}" for v in vals]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
