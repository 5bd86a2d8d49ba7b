"""Scalar Lagrange (CG_k) and discontinuous (DG_k) spaces on triangles.

Reference triangle has vertices (0, 0), (1, 0), (0, 1).  Barycentric
coordinates are ``(1 - x - y, x, y)``.  Local nodes are ordered vertices
first, then the ``k - 1`` nodes of each edge (edge ``i`` runs from local
vertex ``i + 1`` to ``i + 2``), then interior nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from ._parallel import map_elements
from .mesh import Mesh
from .quadrature import quad_rule

DERIVS = ("value", "dx", "dy")


@lru_cache(maxsize=None)
def lagrange_multi_indices(k: int) -> np.ndarray:
    """Barycentric multi-indices (i0, i1, i2), i0 + i1 + i2 = k, in local node order."""
    if k == 0:
        return np.zeros((1, 3), dtype=np.int64)
    out = []
    for v in range(3):
        idx = [0, 0, 0]
        idx[v] = k
        out.append(idx)
    for e in range(3):
        a, b = (e + 1) % 3, (e + 2) % 3
        for s in range(1, k):
            idx = [0, 0, 0]
            idx[a], idx[b] = k - s, s
            out.append(idx)
    for i2 in range(1, k):
        for i1 in range(1, k - i2):
            out.append([k - i1 - i2, i1, i2])
    arr = np.array(out, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def reference_nodes(k: int) -> np.ndarray:
    if k == 0:
        return np.array([[1 / 3, 1 / 3]])
    mi = lagrange_multi_indices(k)
    return mi[:, 1:] / k


def n_local(k: int) -> int:
    return (k + 1) * (k + 2) // 2


def _silvester(k, lam):
    """Factor L_i(lam) = prod_{m<i} (k lam - m)/(m + 1) and its derivative, i = 0..k."""
    n = lam.shape[0]
    vals = np.ones((k + 1, n))
    ders = np.zeros((k + 1, n))
    for i in range(1, k + 1):
        f = (k * lam - (i - 1)) / i
        ders[i] = ders[i - 1] * f + vals[i - 1] * (k / i)
        vals[i] = vals[i - 1] * f
    return vals, ders


def eval_basis(k: int, points):
    """Lagrange basis on equispaced nodes at reference ``points``.

    Parameters
    ----------
    k : int
        Polynomial degree.
    points : array_like, shape (2,) or (n, 2)
        Reference coordinates.

    Returns
    -------
    values : ndarray, shape (n, nloc)
    gradients : ndarray, shape (n, nloc, 2)
        Reference-coordinate gradients.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lam = np.stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]])
    if np.any(lam < -1e-12):
        raise ValueError("point outside the reference triangle")
    n = pts.shape[0]
    if k == 0:
        return np.ones((n, 1)), np.zeros((n, 1, 2))
    factors = [_silvester(k, lam[j]) for j in range(3)]
    mi = lagrange_multi_indices(k)
    nloc = len(mi)
    values = np.empty((n, nloc))
    dlam = np.empty((3, n, nloc))
    for a, (i0, i1, i2) in enumerate(mi):
        f = (factors[0][0][i0], factors[1][0][i1], factors[2][0][i2])
        d = (factors[0][1][i0], factors[1][1][i1], factors[2][1][i2])
        values[:, a] = f[0] * f[1] * f[2]
        dlam[0, :, a] = d[0] * f[1] * f[2]
        dlam[1, :, a] = f[0] * d[1] * f[2]
        dlam[2, :, a] = f[0] * f[1] * d[2]
    grads = np.stack([dlam[1] - dlam[0], dlam[2] - dlam[0]], axis=-1)
    return values, grads


@lru_cache(maxsize=64)
def _tabulate_cached(k, key, shape):
    pts = np.frombuffer(key).reshape(shape)
    v, g = eval_basis(k, pts)
    v.setflags(write=False)
    g.setflags(write=False)
    return v, g


def tabulate(k: int, points: np.ndarray):
    pts = np.ascontiguousarray(points, dtype=float)
    return _tabulate_cached(k, pts.tobytes(), pts.shape)


@dataclass(frozen=True, eq=False)
class Geometry:
    """Affine maps of all elements: x = origin + jac @ xi."""
    origin: np.ndarray    # (T, 2)
    jac: np.ndarray       # (T, 2, 2)
    det: np.ndarray       # (T,)
    inv_t: np.ndarray     # (T, 2, 2), transpose of the inverse Jacobian

    def to_physical(self, ref_points, sl=slice(None)):
        """Physical coordinates (T, nq, 2) of reference points on each element."""
        return self.origin[sl, None, :] + np.einsum("tij,qj->tqi", self.jac[sl], ref_points)

    def physical_gradients(self, ref_grads, sl=slice(None)):
        """Map (nq, nloc, 2) reference gradients to (T, nq, nloc, 2)."""
        return np.einsum("tij,qnj->tqni", self.inv_t[sl], ref_grads)


@lru_cache(maxsize=16)
def geometry(mesh: Mesh) -> Geometry:
    p = mesh.vertices[mesh.triangles]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(det <= 0):
        raise ValueError("degenerate or inverted element")
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1] / det
    inv[:, 1, 1] = jac[:, 0, 0] / det
    inv[:, 0, 1] = -jac[:, 0, 1] / det
    inv[:, 1, 0] = -jac[:, 1, 0] / det
    return Geometry(p[:, 0].copy(), jac, det, np.transpose(inv, (0, 2, 1)).copy())


class FunctionSpace:
    """CG_k (k >= 1) or DG_k (k >= 0) on a triangular mesh."""

    def __init__(self, mesh: Mesh, family: str, degree: int):
        family = family.upper()
        if family not in ("CG", "DG"):
            raise ValueError(f"unknown family {family!r}")
        if int(degree) != degree or degree < (1 if family == "CG" else 0):
            raise ValueError(f"invalid degree {degree} for {family}")
        self.mesh = mesh
        self.family = family
        self.degree = int(degree)
        self.dof_map = self._build_dof_map()
        self.dof_map.setflags(write=False)
        self.n_dofs = int(self.dof_map.max()) + 1 if self.dof_map.size else 0

    def __repr__(self):
        return f"FunctionSpace({self.family}{self.degree}, n_dofs={self.n_dofs})"

    @property
    def continuity_order(self) -> int:
        return 1 if self.family == "CG" else 0

    @property
    def n_local(self) -> int:
        return n_local(self.degree)

    @property
    def geometry(self) -> Geometry:
        return geometry(self.mesh)

    def _build_dof_map(self):
        T = self.mesh.n_triangles
        k = self.degree
        nl = n_local(k)
        if self.family == "DG":
            return np.arange(T * nl, dtype=np.int64).reshape(T, nl)
        tris = self.mesh.triangles
        V = self.mesh.n_vertices
        dofs = np.empty((T, nl), dtype=np.int64)
        dofs[:, :3] = tris
        if k == 1:
            return dofs
        _, tri_edges = self.mesh.edges()
        n_edges = tri_edges.max() + 1
        ne = k - 1
        for e in range(3):
            a, b = tris[:, (e + 1) % 3], tris[:, (e + 2) % 3]
            base = V + tri_edges[:, e] * ne
            pos = np.arange(ne)[None, :]
            pos = np.where((a < b)[:, None], pos, ne - 1 - pos)
            dofs[:, 3 + e * ne: 3 + (e + 1) * ne] = base[:, None] + pos
        n_int = nl - 3 - 3 * ne
        if n_int:
            first = V + n_edges * ne
            dofs[:, 3 + 3 * ne:] = first + np.arange(T * n_int).reshape(T, n_int)
        return dofs

    def dof_coordinates(self) -> np.ndarray:
        """Physical coordinates of every global dof (its Lagrange node)."""
        pts = self.geometry.to_physical(reference_nodes(self.degree))
        out = np.empty((self.n_dofs, 2))
        out[self.dof_map.ravel()] = pts.reshape(-1, 2)
        return out

    def boundary_dofs(self, markers=None) -> np.ndarray:
        """Dofs whose nodes lie on boundary edges with the given markers (CG only)."""
        if self.family != "CG":
            raise ValueError("boundary dofs are defined for CG spaces only")
        k = self.degree
        sel = np.ones(len(self.mesh.boundary_edges), dtype=bool)
        if markers is not None:
            sel = np.isin(self.mesh.boundary_markers, list(markers))
        bnd = {tuple(sorted(e)) for e in self.mesh.boundary_edges[sel].tolist()}
        tris = self.mesh.triangles
        out = set()
        ne = k - 1
        for t in range(len(tris)):
            for e in range(3):
                a, b = int(tris[t, (e + 1) % 3]), int(tris[t, (e + 2) % 3])
                if (min(a, b), max(a, b)) in bnd:
                    out.update((a, b))
                    out.update(self.dof_map[t, 3 + e * ne: 3 + (e + 1) * ne].tolist())
        return np.array(sorted(out), dtype=np.int64)


class FeFunction:
    """Coefficient vector bound to a :class:`FunctionSpace`."""

    def __init__(self, space: FunctionSpace, coeffs=None):
        self.space = space
        if coeffs is None:
            coeffs = np.zeros(space.n_dofs)
        self._coeffs = np.array(coeffs, dtype=float)
        if self._coeffs.shape != (space.n_dofs,):
            raise ValueError(f"expected {space.n_dofs} coefficients, got {self._coeffs.shape}")

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    def set_coeffs(self, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != self._coeffs.shape:
            raise ValueError("coefficient length mismatch")
        self._coeffs = values.copy()

    def local_coeffs(self, sl=slice(None)) -> np.ndarray:
        return self._coeffs[self.space.dof_map[sl]]

    def values_at(self, ref_points, sl=slice(None)) -> np.ndarray:
        """Values (T, nq) at reference points of every element."""
        B, _ = tabulate(self.space.degree, ref_points)
        return self.local_coeffs(sl) @ B.T

    def gradients_at(self, ref_points, sl=slice(None)) -> np.ndarray:
        """Physical gradients (T, nq, 2), one-sided per element."""
        _, G = tabulate(self.space.degree, ref_points)
        ref = np.einsum("tn,qnj->tqj", self.local_coeffs(sl), G)
        return np.einsum("tij,tqj->tqi", self.space.geometry.inv_t[sl], ref)

    def evaluate(self, ref_points, deriv="value", sl=slice(None)) -> np.ndarray:
        if deriv == "value":
            return self.values_at(ref_points, sl)
        if deriv not in DERIVS:
            raise ValueError(f"unknown derivative {deriv!r}")
        return self.gradients_at(ref_points, sl)[..., 0 if deriv == "dx" else 1]


@dataclass(frozen=True)
class Derivative:
    """Elementwise (discontinuous) partial derivative of an FE function."""
    function: FeFunction
    direction: str = "dx"

    def __post_init__(self):
        if self.direction not in ("dx", "dy"):
            raise ValueError(f"derivative direction must be dx or dy, got {self.direction!r}")

    @property
    def space(self) -> FunctionSpace:
        return self.function.space

    def values_at(self, ref_points, sl=slice(None)):
        return self.function.evaluate(ref_points, self.direction, sl)


@dataclass(frozen=True)
class ScalarField:
    """Analytic field; ``value(x, y)`` and ``gradient(x, y)`` take arrays."""
    value: Callable
    gradient: Optional[Callable] = None

    def __call__(self, x, y):
        return self.value(x, y)

    def grad(self, x, y):
        if self.gradient is None:
            raise ValueError("field has no gradient")
        gx, gy = self.gradient(x, y)
        return (np.broadcast_to(gx, np.shape(x)).astype(float),
                np.broadcast_to(gy, np.shape(x)).astype(float))

    def sample(self, points):
        pts = np.asarray(points, dtype=float)
        return np.broadcast_to(self.value(pts[..., 0], pts[..., 1]), pts.shape[:-1]).astype(float)


def constant(c: float) -> ScalarField:
    return ScalarField(lambda x, y: np.full(np.shape(x), float(c)),
                       lambda x, y: (np.zeros(np.shape(x)), np.zeros(np.shape(x))))


def interpolate(space: FunctionSpace, field: ScalarField) -> FeFunction:
    """Nodal interpolant: each coefficient is the field value at its node."""
    return FeFunction(space, field.sample(space.dof_coordinates()))


def eval_function(f: FeFunction, element: int, point, deriv: str = "value") -> float:
    """Value or physical derivative of ``f`` restricted to one element."""
    if not 0 <= element < f.space.mesh.n_triangles:
        raise IndexError(f"element {element} out of range")
    pts = np.asarray(point, dtype=float).reshape(1, 2)
    sl = slice(element, element + 1)
    return float(f.evaluate(pts, deriv, sl)[0, 0])


def source_values(source, ref_points, geom: Geometry, sl=slice(None)) -> np.ndarray:
    """Values (T, nq) of a field, FE function or derivative at reference points."""
    if isinstance(source, ScalarField):
        return source.sample(geom.to_physical(ref_points, sl))
    return source.values_at(ref_points, sl)


def source_degree(source) -> Optional[int]:
    """Polynomial degree of an FE source, ``None`` for analytic fields."""
    if isinstance(source, Derivative):
        return max(source.space.degree - 1, 0)
    if isinstance(source, FeFunction):
        return source.space.degree
    return None


def integrate(source, mesh: Mesh, quad_degree: int) -> float:
    """Integral over the domain of a field or FE function."""
    rule = quad_rule(quad_degree)
    geom = geometry(mesh)

    def part(sl):
        vals = source_values(source, rule.points, geom, sl)
        return geom.det[sl] * (vals @ rule.weights)

    return float(np.sum(map_elements(mesh.n_triangles, part)))
