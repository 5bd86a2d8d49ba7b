"""Model problems: a smooth Dirichlet Poisson demo and a mixed-BC corner singularity.

Corner problem: -Laplace(u) = 1 on [-1/2, 1/2] x [0, 1] with u = 0 on the
bottom for x >= 0, homogeneous Neumann on the bottom for x < 0, and
u = g - y^2/2 elsewhere, where g = r^(1/2) sin(theta/2).  The exact
solution is u = g - y^2/2.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .femspace import (Derivative, FeFunction, FunctionSpace, ScalarField,
                       interpolate, tabulate)
from .linalg import assemble_local, pcg_solve
from .mesh import BOTTOM, BOTTOM_LEFT, LEFT, RIGHT, TOP, Mesh, build_structured, refine
from .norms import h1_error, l2_error
from .quadrature import quad_rule
from .sisg_filter import assemble_load, l2_project

log = logging.getLogger(__name__)

CORNER_RECT = (-0.5, 0.0, 0.5, 1.0)
CORNER_DIRICHLET = (BOTTOM, RIGHT, TOP, LEFT)
CORNER_NEUMANN = (BOTTOM_LEFT,)


def assemble_stiffness(space: FunctionSpace, quad_degree: Optional[int] = None):
    """Stiffness matrix A_ij = integral of grad phi_i . grad phi_j."""
    k = space.degree
    q = max(2 * k - 2, 0) if quad_degree is None else quad_degree
    rule = quad_rule(q)
    _, G = tabulate(k, rule.points)
    geom = space.geometry
    grads = geom.physical_gradients(G)   # (T, nq, nl, 2)
    local = np.einsum("q,tqad,tqbd->tab", rule.weights, grads, grads) * geom.det[:, None, None]
    return assemble_local(space.n_dofs, space.dof_map, local)


def solve_dirichlet_poisson(space: FunctionSpace, f: ScalarField, boundary_value: ScalarField,
                            dirichlet_markers=None, quad_degree: Optional[int] = None,
                            rel_tol: float = 1e-10) -> FeFunction:
    """Galerkin solution of -Laplace(u) = f with nodal Dirichlet data.

    Boundary edges whose marker is not in ``dirichlet_markers`` get the
    natural homogeneous Neumann condition.  Dirichlet dofs are eliminated
    symmetrically and the reduced system is solved by PCG.
    """
    if space.family != "CG":
        raise ValueError("Poisson solves need a CG space")
    k = space.degree
    q = 2 * k + 2 if quad_degree is None else quad_degree
    A = assemble_stiffness(space)
    b = assemble_load(space, f, q)
    fixed = space.boundary_dofs(dirichlet_markers)
    if fixed.size == 0:
        raise ValueError("no Dirichlet dofs: marker set incomplete")
    xy = space.dof_coordinates()[fixed]
    u = np.zeros(space.n_dofs)
    u[fixed] = boundary_value.sample(xy)
    free = np.setdiff1d(np.arange(space.n_dofs), fixed)
    As = A.to_scipy()
    rhs = b[free] - As[free][:, fixed] @ u[fixed]
    sol = pcg_solve(A.submatrix(free, free), rhs, rel_tol=rel_tol)
    u[free] = sol.x
    log.debug("poisson solve: %d free dofs, %d PCG iterations", free.size, sol.iterations)
    return FeFunction(space, u)


# smooth demo ------------------------------------------------------------

def demo_exact() -> ScalarField:
    """u = -cos(4 pi x) sin(4 pi y)."""
    w = 4 * np.pi
    return ScalarField(
        lambda x, y: -np.cos(w * x) * np.sin(w * y),
        lambda x, y: (w * np.sin(w * x) * np.sin(w * y), -w * np.cos(w * x) * np.cos(w * y)))


def demo_exact_dx() -> ScalarField:
    w = 4 * np.pi
    return ScalarField(
        lambda x, y: w * np.sin(w * x) * np.sin(w * y),
        lambda x, y: (w * w * np.cos(w * x) * np.sin(w * y), w * w * np.sin(w * x) * np.cos(w * y)))


def demo_source() -> ScalarField:
    """f = -Laplace(u) for the demo solution, i.e. -32 pi^2 cos(4 pi x) sin(4 pi y)."""
    w = 4 * np.pi
    return ScalarField(lambda x, y: -2 * w * w * np.cos(w * x) * np.sin(w * y))


def solve_poisson_demo(n: int, k: int) -> FeFunction:
    """CG_k solution of the smooth demo on an n x n right-diagonal mesh of the unit square.

    The exact solution does not vanish on x = 0 and x = 1, so its trace is
    imposed as Dirichlet data on the whole boundary.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    space = FunctionSpace(build_structured(n, n), "CG", k)
    return solve_dirichlet_poisson(space, demo_source(), demo_exact())


def filtered_derivative(uh: FeFunction, direction: str = "dx",
                        target: Optional[FunctionSpace] = None) -> FeFunction:
    """Project the elementwise derivative of ``uh`` onto a CG space (default: uh's space)."""
    if target is None:
        target = FunctionSpace(uh.space.mesh, "CG", uh.space.degree)
    return l2_project(target, Derivative(uh, direction))


# corner singularity ------------------------------------------------------

def _theta(x, y):
    # full angle in [0, pi] on the upper half plane
    return np.arctan2(y, x)


@dataclass(frozen=True)
class CornerFields:
    epsilon: float
    g: ScalarField
    u: ScalarField
    gx: ScalarField
    gx_eps: ScalarField


def corner_fields(epsilon: float = 0.0) -> CornerFields:
    """Analytic fields of the corner problem with derivative regularisation ``epsilon``."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    eps = float(epsilon)

    def g(x, y):
        r2 = x * x + y * y
        return r2 ** 0.25 * np.sin(0.5 * _theta(x, y))

    def g_grad(x, y, e=0.0):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r2 = e + x * x + y * y
        if np.any(r2 == 0.0):
            raise ZeroDivisionError("corner field gradient evaluated at the singular point (0, 0)")
        th = 0.5 * _theta(x, y)
        s, c = np.sin(th), np.cos(th)
        pre = 0.5 * r2 ** -0.75
        return pre * (x * s - y * c), pre * (y * s + x * c)

    def gx_eps(x, y):
        return g_grad(x, y, eps)[0]

    def gx_exact(x, y):
        return g_grad(x, y)[0]

    def u(x, y):
        return g(x, y) - 0.5 * y * y

    def u_grad(x, y):
        gx, gy = g_grad(x, y)
        return gx, gy - y

    return CornerFields(
        epsilon=eps,
        g=ScalarField(g, g_grad),
        u=ScalarField(u, u_grad),
        gx=ScalarField(gx_exact),
        gx_eps=ScalarField(gx_eps),
    )


def corner_initial_mesh(n: int = 2) -> Mesh:
    return build_structured(n, n, CORNER_RECT, "right")


def solve_corner(mesh: Mesh, k: int = 1, rel_tol: float = 1e-10) -> FeFunction:
    markers = set(np.unique(mesh.boundary_markers).tolist())
    if not set(CORNER_DIRICHLET) <= markers or not set(CORNER_NEUMANN) <= markers:
        raise ValueError(f"corner problem needs markers 1-5, mesh has {sorted(markers)}")
    space = FunctionSpace(mesh, "CG", k)
    one = ScalarField(lambda x, y: np.ones(np.shape(x)))
    return solve_dirichlet_poisson(space, one, corner_fields().u, CORNER_DIRICHLET,
                                   rel_tol=rel_tol)


def error_quad_degree(k: int) -> int:
    return 2 * k + 8


def epsilon_for(mesh: Mesh, initial: bool) -> float:
    """Regularisation for the reference derivative: 1e-3, or min(1e-3, h_min^2) once adapted."""
    if initial:
        return 1e-3
    from .mesh import quality_report
    return float(min(1e-3, quality_report(mesh).h.min() ** 2))


def sisg_error(uh: FeFunction, epsilon: float, quad_degree: Optional[int] = None) -> float:
    """L2 distance between the filtered x-derivative of uh and the regularised g_x."""
    k = uh.space.degree
    q = error_quad_degree(k) if quad_degree is None else quad_degree
    filtered = filtered_derivative(uh, "dx")
    return l2_error(filtered, corner_fields(epsilon).gx_eps, q)


@dataclass(frozen=True)
class StudyRecord:
    N: int
    tolerance: float
    sisg_error: float
    h1_error: float
    epsilon: float
    capped: bool = False
    mesh: Optional[Mesh] = None


def dorfler_mark(indicators: np.ndarray, theta: float = 0.5) -> np.ndarray:
    """Smallest element set carrying at least ``theta`` of the summed indicators."""
    order = np.argsort(-indicators, kind="stable")
    cum = np.cumsum(indicators[order])
    n = int(np.searchsorted(cum, theta * cum[-1])) + 1
    return np.sort(order[:n])


def adaptive_study(tolerances, max_vertices: int = 10_000, theta: float = 0.5,
                   stop_factor: float = 6.0, initial_mesh: Optional[Mesh] = None,
                   callback: Optional[Callable] = None) -> list[StudyRecord]:
    """Exact-error-driven adaptive refinement for the corner problem.

    For each tolerance (processed largest first) the loop solves, computes
    the elementwise H1-seminorm error against the exact solution and stops
    when ``seminorm_error**2 <= stop_factor * tolerance``; otherwise it
    Doerfler-marks with fraction ``theta`` and bisects.  The refinement path
    does not depend on the tolerance, so smaller tolerances continue from
    the previous stopping mesh.
    """
    tols = [float(t) for t in tolerances]
    if any(b > a for a, b in zip(tols, tols[1:])):
        raise ValueError("tolerances must be non-increasing")
    exact = corner_fields().u
    mesh = corner_initial_mesh() if initial_mesh is None else initial_mesh
    initial = True
    records = []
    uh = report = None
    for tol in tols:
        capped = False
        while True:
            if uh is None:
                uh = solve_corner(mesh)
                report = h1_error(uh, exact, error_quad_degree(1))
            est = report.h1_seminorm_error ** 2
            if callback is not None:
                callback(mesh, report)
            if est <= stop_factor * tol:
                break
            if mesh.n_vertices >= max_vertices:
                capped = True
                log.warning("vertex cap %d reached before tolerance %g", max_vertices, tol)
                break
            marked = dorfler_mark(report.per_element_seminorm_sq, theta)
            mesh = refine(mesh, marked)
            initial = False
            uh = None
        eps = epsilon_for(mesh, initial)
        records.append(StudyRecord(N=mesh.n_vertices, tolerance=tol,
                                   sisg_error=sisg_error(uh, eps), h1_error=report.h1_error,
                                   epsilon=eps, capped=capped, mesh=mesh))
    return records
