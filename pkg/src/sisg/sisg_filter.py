"""Global L2 projection onto a finite-element space.

The projection of a source ``s`` onto ``V_h`` is the ``p`` in ``V_h`` with
``(p, v) = (s, v)`` for all ``v`` in ``V_h``.  Projecting a discontinuous
source (a DG function, or the elementwise derivative of a CG function)
onto a CG space yields a continuous field with the same order of accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ._parallel import map_elements
from .femspace import (Derivative, FeFunction, FunctionSpace, ScalarField,
                       source_degree, source_values, tabulate)
from .linalg import SparseMatrix, assemble_local, pcg_solve
from .mesh import quality_report
from .norms import ErrorField, derivative_tensor_sq_elementwise
from .quadrature import quad_rule

Source = Union[ScalarField, FeFunction, Derivative]


@dataclass
class ProjectionProblem:
    target_space: FunctionSpace
    source: Source
    quadrature_degree: Optional[int] = None
    solver_tol: float = 1e-10
    _mass: Optional[SparseMatrix] = field(default=None, repr=False)

    def __post_init__(self):
        if not isinstance(self.source, ScalarField) \
                and self.source.space.mesh is not self.target_space.mesh:
            raise ValueError("FE source must live on the target mesh")

    def rhs_degree(self) -> int:
        if self.quadrature_degree is not None:
            return self.quadrature_degree
        k = self.target_space.degree
        d = source_degree(self.source)
        if d is None:
            return 2 * k + 4
        return max(2 * k + 2, k + d)


def assemble_mass(space: FunctionSpace, quad_degree: Optional[int] = None) -> SparseMatrix:
    """Mass matrix M_ij = integral of phi_i phi_j."""
    k = space.degree
    q = 2 * k if quad_degree is None else quad_degree
    if q < 2 * k:
        raise ValueError(f"mass quadrature degree {q} below 2k = {2 * k}")
    rule = quad_rule(q)
    B, _ = tabulate(k, rule.points)
    ref = (B * rule.weights[:, None]).T @ B
    local = space.geometry.det[:, None, None] * ref[None]
    return assemble_local(space.n_dofs, space.dof_map, local)


def assemble_load(space: FunctionSpace, source: Source, quad_degree: int) -> np.ndarray:
    """Vector b_i = integral of source * phi_i, elementwise quadrature."""
    rule = quad_rule(quad_degree)
    B, _ = tabulate(space.degree, rule.points)
    geom = space.geometry
    BW = B * rule.weights[:, None]

    def part(sl):
        vals = source_values(source, rule.points, geom, sl)
        return geom.det[sl, None] * (vals @ BW)

    local = map_elements(space.mesh.n_triangles, part)
    return np.bincount(space.dof_map.ravel(), weights=local.ravel(), minlength=space.n_dofs)


def project(problem: ProjectionProblem) -> FeFunction:
    """Solve M c = b for the L2 projection of ``problem.source``."""
    space = problem.target_space
    M = problem._mass if problem._mass is not None else assemble_mass(space)
    b = assemble_load(space, problem.source, problem.rhs_degree())
    sol = pcg_solve(M, b, rel_tol=problem.solver_tol)
    return FeFunction(space, sol.x)


def l2_project(space: FunctionSpace, source: Source, quad_degree: Optional[int] = None,
               solver_tol: float = 1e-10) -> FeFunction:
    return project(ProjectionProblem(space, source, quad_degree, solver_tol))


def galerkin_residual(proj: FeFunction, source: Source, quad_degree: int) -> np.ndarray:
    """Entries of (source - proj, phi_i) for every basis function of proj's space."""
    space = proj.space
    return assemble_load(space, source, quad_degree) - assemble_mass(space).matvec(proj.coeffs)


def max_edge_jump(f, points_per_edge: int = 3) -> float:
    """Largest jump of ``f`` across interior edges, sampled at interior edge points.

    ``f`` is an FE function or a :class:`Derivative`.
    """
    mesh = f.space.mesh
    edges, tri_edges = mesh.edges()
    owners = [[] for _ in range(len(edges))]
    for t, row in enumerate(tri_edges.tolist()):
        for i, e in enumerate(row):
            owners[e].append((t, i))
    s = np.arange(1, points_per_edge + 1) / (points_per_edge + 1)
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    worst = 0.0
    for e, own in enumerate(owners):
        if len(own) != 2:
            continue
        a, b = edges[e]
        vals = []
        for t, i in own:
            tri = mesh.triangles[t].tolist()
            ra, rb = corners[tri.index(a)], corners[tri.index(b)]
            pts = ra[None, :] * (1 - s[:, None]) + rb[None, :] * s[:, None]
            vals.append(f.values_at(pts, slice(t, t + 1))[0])
        worst = max(worst, float(np.max(np.abs(vals[0] - vals[1]))))
    return worst


def broken_estimate_ratio(u: ScalarField, proj: FeFunction, k: int, t: int,
                          quad_degree: Optional[int] = None, derivative_norm=None) -> float:
    """Ratio of the two sides of the mesh-weighted projection error bound.

    Numerator: sum_{m<=t} sum_e h_e^{2m} ||grad^m (u - proj)||^2_{L2(e)}.
    Denominator: sum_e h_e^{2(k+1)} ||grad^{k+1} u||^2_{L2(e)}, with the
    derivative tensor norm supplied by ``derivative_norm(x, y)`` or
    estimated by central differences.

    Returns 0 when both sides vanish (u is reproduced exactly).
    """
    if t not in (0, 1):
        raise ValueError("continuity order t must be 0 or 1")
    mesh = proj.space.mesh
    q = 2 * k + 6 if quad_degree is None else quad_degree
    h = quality_report(mesh).h
    err = ErrorField(mesh, proj, u)
    lhs = sum(float(np.sum(h ** (2 * m) * err.elementwise_sq(m, q))) for m in range(t + 1))
    rhs_e = derivative_tensor_sq_elementwise(mesh, u, k + 1, q, derivative_norm)
    rhs = float(np.sum(h ** (2 * (k + 1)) * rhs_e))
    if rhs <= 1e-20:
        if lhs <= 1e-16:
            return 0.0
        raise ArithmeticError(
            f"estimate right-hand side vanishes but error is {lhs:.3e}; projection mismatch")
    return lhs / rhs
