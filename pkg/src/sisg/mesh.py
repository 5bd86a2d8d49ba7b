"""Conforming triangular meshes on rectangles.

Triangles are stored counterclockwise.  Each triangle carries the local
index of its refinement edge (edge ``i`` is the edge opposite local vertex
``i``), which drives newest-vertex bisection in :func:`refine`.

Boundary markers on a rectangle are 1 (bottom), 2 (right), 3 (top) and
4 (left).  When the rectangle straddles ``x = 0`` the part of the bottom
side with ``x < 0`` gets marker 5 instead of 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BOTTOM, RIGHT, TOP, LEFT, BOTTOM_LEFT = 1, 2, 3, 4, 5


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_markers: np.ndarray
    refinement_edge: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 2)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        be = np.ascontiguousarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        bm = np.ascontiguousarray(self.boundary_markers, dtype=np.int64).reshape(-1)
        if self.refinement_edge is None:
            ref = _longest_edge(v, t)
        else:
            ref = np.ascontiguousarray(self.refinement_edge, dtype=np.int64).reshape(-1)
        if len(bm) != len(be):
            raise MeshError("one marker per boundary edge required")
        if len(ref) != len(t):
            raise MeshError("one refinement edge per triangle required")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle references a missing vertex")
        for name, arr in (("vertices", v), ("triangles", t), ("boundary_edges", be),
                          ("boundary_markers", bm), ("refinement_edge", ref)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self):
        """Unique edges and the triangle-to-edge map.

        Returns
        -------
        edges : (E, 2) int array, each row sorted ascending
        tri_edges : (T, 3) int array; ``tri_edges[t, i]`` is the edge
            opposite local vertex ``i``
        """
        t = self.triangles
        local = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)
        flat = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(flat, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    def edge_use_counts(self) -> np.ndarray:
        _, tri_edges = self.edges()
        return np.bincount(tri_edges.ravel())

    def boundary_vertices(self, markers=None) -> np.ndarray:
        """Sorted vertex indices on boundary edges carrying any of ``markers``."""
        sel = np.ones(len(self.boundary_edges), dtype=bool)
        if markers is not None:
            sel = np.isin(self.boundary_markers, list(markers))
        return np.unique(self.boundary_edges[sel])

    def check(self):
        """Raise :class:`MeshError` if a structural invariant is violated."""
        if np.any(self.signed_areas() <= 0):
            raise MeshError("triangle with non-positive signed area")
        edges, tri_edges = self.edges()
        counts = np.bincount(tri_edges.ravel(), minlength=len(edges))
        if np.any(counts > 2):
            raise MeshError("edge shared by more than two triangles")
        bnd = edges[counts == 1]
        marked = np.sort(self.boundary_edges, axis=1)
        if len(marked) != len(bnd):
            raise MeshError(
                f"{len(bnd)} boundary edges but {len(marked)} carry markers")
        a = {tuple(e) for e in bnd.tolist()}
        b = {tuple(e) for e in marked.tolist()}
        if a != b:
            raise MeshError("marked edges do not match the topological boundary")


def _longest_edge(v, t):
    if len(t) == 0:
        return np.zeros(0, dtype=np.int64)
    p = v[t]
    lengths = np.stack([
        np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
        np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
    ], axis=1)
    return np.argmax(lengths, axis=1)


def build_structured(nx: int, ny: int, rect=(0.0, 0.0, 1.0, 1.0), diag: str = "right") -> Mesh:
    """Triangulate an ``nx`` by ``ny`` grid of rectangles.

    ``diag`` selects the split of each cell: ``"right"`` uses the diagonal
    from lower-left to upper-right, ``"left"`` the other one, ``"crossed"``
    adds the cell centre and produces four triangles.  The refinement edge
    of every triangle is the edge opposite its right angle (for square cells).
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise MeshError(f"grid counts must be positive integers, got {nx}x{ny}")
    nx, ny = int(nx), int(ny)
    x0, y0, x1, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"inverted or empty rectangle {rect}")
    if diag not in ("right", "left", "crossed"):
        raise MeshError(f"unknown diagonal option {diag!r}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    verts = [np.column_stack([X.ravel(), Y.ravel()])]

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    if diag == "crossed":
        cx = 0.5 * (xs[:-1] + xs[1:])
        cy = 0.5 * (ys[:-1] + ys[1:])
        CX, CY = np.meshgrid(cx, cy)
        verts.append(np.column_stack([CX.ravel(), CY.ravel()]))
    base = (nx + 1) * (ny + 1)
    for j in range(ny):
        for i in range(nx):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            # peak vertex first, so the refinement edge is local edge 0
            if diag == "right":
                tris += [(b, c, a), (d, a, c)]
            elif diag == "left":
                tris += [(a, b, d), (c, d, b)]
            else:
                m = base + j * nx + i
                tris += [(m, a, b), (m, b, c), (m, c, d), (m, d, a)]
    vertices = np.vstack(verts)
    triangles = np.array(tris, dtype=np.int64)

    bedges, bmarks = [], []
    for i in range(nx):
        e = (vid(i, 0), vid(i + 1, 0))
        xm = 0.5 * (xs[i] + xs[i + 1])
        bedges.append(e)
        bmarks.append(BOTTOM_LEFT if (x0 < 0.0 < x1 and xm < 0.0) else BOTTOM)
    for j in range(ny):
        bedges.append((vid(nx, j), vid(nx, j + 1)))
        bmarks.append(RIGHT)
    for i in range(nx, 0, -1):
        bedges.append((vid(i, ny), vid(i - 1, ny)))
        bmarks.append(TOP)
    for j in range(ny, 0, -1):
        bedges.append((vid(0, j), vid(0, j - 1)))
        bmarks.append(LEFT)

    return Mesh(vertices, triangles, np.array(bedges), np.array(bmarks),
                np.zeros(len(triangles), dtype=np.int64))


def _peak_first(triangles, ref):
    """Rotate each triangle so its refinement edge sits opposite slot 0."""
    idx = (np.arange(3)[None, :] + ref[:, None]) % 3
    return np.take_along_axis(triangles, idx, axis=1)


def refine(mesh: Mesh, marked) -> Mesh:
    """Newest-vertex bisection of ``marked`` triangles with conformity closure.

    Every marked triangle is bisected at least once; neighbours are bisected
    as needed so the result has no hanging vertices.  The new vertex of a
    bisection becomes the peak of both children.
    """
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray)
                                  else marked, dtype=np.int64))
    if marked.size and (marked[0] < 0 or marked[-1] >= mesh.n_triangles):
        raise MeshError("marked element index out of range")
    if marked.size == 0:
        return mesh

    tris = _peak_first(mesh.triangles, mesh.refinement_edge)
    edges, tri_edges = Mesh(mesh.vertices, tris, mesh.boundary_edges,
                            mesh.boundary_markers, np.zeros(len(tris))).edges()
    ref_edge = tri_edges[:, 0]

    flagged = np.zeros(len(edges), dtype=bool)
    flagged[ref_edge[marked]] = True
    while True:
        need = flagged[tri_edges].any(axis=1) & ~flagged[ref_edge]
        if not need.any():
            break
        flagged[ref_edge[need]] = True

    split = np.flatnonzero(flagged)
    midpoint = np.full(len(edges), -1, dtype=np.int64)
    midpoint[split] = mesh.n_vertices + np.arange(len(split))
    new_xy = 0.5 * (mesh.vertices[edges[split, 0]] + mesh.vertices[edges[split, 1]])
    vertices = np.vstack([mesh.vertices, new_xy])

    lookup = {(int(a), int(b)): int(m) for (a, b), m in zip(edges[split], midpoint[split])}

    def mid(a, b):
        return lookup.get((a, b) if a < b else (b, a), -1)

    out = []

    def bisect(a, b, c):
        m = mid(b, c)
        if m < 0:
            out.append((a, b, c))
            return
        bisect(m, a, b)
        bisect(m, c, a)

    for a, b, c in tris.tolist():
        bisect(a, b, c)

    bedges, bmarks = [], []
    for (a, b), mk in zip(mesh.boundary_edges.tolist(), mesh.boundary_markers.tolist()):
        m = mid(a, b)
        if m < 0:
            bedges.append((a, b))
            bmarks.append(mk)
        else:
            bedges += [(a, m), (m, b)]
            bmarks += [mk, mk]

    triangles = np.array(out, dtype=np.int64)
    return Mesh(vertices, triangles, np.array(bedges), np.array(bmarks),
                np.zeros(len(triangles), dtype=np.int64))


def refine_uniform(mesh: Mesh, times: int = 1) -> Mesh:
    for _ in range(times):
        mesh = refine(mesh, np.arange(mesh.n_triangles))
    return mesh


@dataclass(frozen=True)
class QualityReport:
    h: np.ndarray
    rho: np.ndarray
    gamma: float
    quasi_uniform_ratio: float

    def __str__(self):
        return (f"elements            {len(self.h)}\n"
                f"gamma               {self.gamma:.6f}\n"
                f"quasi_uniform_ratio {self.quasi_uniform_ratio:.6f}\n"
                f"h_max               {self.h.max():.6e}\n"
                f"rho_min             {self.rho.min():.6e}")


def element_diameters(points: np.ndarray):
    """Enclosing-circle and inscribed-circle diameters of triangles.

    ``points`` has shape (T, 3, 2).  For right or obtuse triangles the
    smallest enclosing circle has the longest edge as diameter; for acute
    triangles it is the circumcircle.
    """
    a = np.linalg.norm(points[:, 2] - points[:, 1], axis=1)
    b = np.linalg.norm(points[:, 0] - points[:, 2], axis=1)
    c = np.linalg.norm(points[:, 1] - points[:, 0], axis=1)
    d1 = points[:, 1] - points[:, 0]
    d2 = points[:, 2] - points[:, 0]
    area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(area <= 0):
        raise MeshError("degenerate (zero-area) triangle")
    sides = np.sort(np.stack([a, b, c], axis=1), axis=1)
    longest = sides[:, 2]
    # acute iff the largest angle is < 90 degrees
    acute = sides[:, 2] ** 2 < sides[:, 0] ** 2 + sides[:, 1] ** 2 - 1e-14 * sides[:, 2] ** 2
    circum = a * b * c / (2.0 * area)
    h = np.where(acute, circum, longest)
    rho = 4.0 * area / (a + b + c)
    return h, rho


def quality_report(mesh: Mesh) -> QualityReport:
    h, rho = element_diameters(mesh.vertices[mesh.triangles])
    return QualityReport(h=h, rho=rho, gamma=float(np.max(h / rho)),
                         quasi_uniform_ratio=float(h.max() / rho.min()))


def write_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text ``V T B`` mesh format."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary_edges)}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for i, j, k in _peak_first(mesh.triangles, mesh.refinement_edge):
            fh.write(f"{i} {j} {k}\n")
        for (i, j), m in zip(mesh.boundary_edges, mesh.boundary_markers):
            fh.write(f"{i} {j} {m}\n")


def read_mesh(path) -> Mesh:
    """Read the plain-text ``V T B`` mesh format.

    The refinement edge of each triangle is taken to be its longest edge.
    Clockwise triangles are reoriented.
    """
    with open(path) as fh:
        tokens = fh.read().split()
    try:
        nv, nt, nb = (int(s) for s in tokens[:3])
        pos = 3
        v = np.array(tokens[pos:pos + 2 * nv], dtype=float).reshape(nv, 2)
        pos += 2 * nv
        t = np.array(tokens[pos:pos + 3 * nt], dtype=np.int64).reshape(nt, 3)
        pos += 3 * nt
        b = np.array(tokens[pos:pos + 3 * nb], dtype=np.int64).reshape(nb, 3)
        pos += 3 * nb
    except (ValueError, IndexError) as exc:
        raise MeshError(f"malformed mesh file {path}: {exc}") from None
    if pos != len(tokens):
        raise MeshError(f"trailing data in mesh file {path}")
    mesh = Mesh(v, t, b[:, :2], b[:, 2])
    area = mesh.signed_areas()
    if np.any(area < 0):
        t = t.copy()
        flip = area < 0
        t[flip] = t[flip][:, [0, 2, 1]]
        mesh = Mesh(v, t, b[:, :2], b[:, 2])
    mesh.check()
    return mesh
