import numpy as np
import pytest

from sisg.femspace import Derivative, FeFunction, FunctionSpace, ScalarField, interpolate
from sisg.mesh import Mesh, build_structured, refine
from sisg.norms import h1_error, l2_error, l2_norm
from sisg.sisg_filter import (ProjectionProblem, assemble_mass, broken_estimate_ratio,
                              galerkin_residual, l2_project, max_edge_jump, project)
from sisg.studies import observed_orders, smooth_field, smooth_field_derivative_norm

SINGLE = Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [[0, 1], [1, 2], [2, 0]], [1, 1, 1])


def test_dg0_mass():
    M = assemble_mass(FunctionSpace(build_structured(1, 1), "DG", 0))
    assert np.allclose(M.to_dense(), np.diag([0.5, 0.5]))


@pytest.mark.parametrize("family,k", [("CG", 1), ("CG", 3), ("DG", 0), ("DG", 2)])
def test_mass_sum_is_area(family, k):
    M = assemble_mass(FunctionSpace(build_structured(3, 2, (0, 0, 2, 1.5)), family, k))
    assert M.data.sum() == pytest.approx(3.0, rel=1e-13)
    assert M.is_symmetric()
    assert np.all(np.linalg.eigvalsh(M.to_dense()) > 0)


def test_cg1_reference_mass():
    M = assemble_mass(FunctionSpace(SINGLE, "CG", 1)).to_dense()
    expected = 0.5 / 12 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]])
    assert np.allclose(M, expected, atol=1e-15)


def test_mass_quadrature_too_low():
    with pytest.raises(ValueError):
        assemble_mass(FunctionSpace(SINGLE, "CG", 2), 3)


def test_projection_onto_constants_is_mean():
    p = l2_project(FunctionSpace(SINGLE, "DG", 0), ScalarField(lambda x, y: x))
    assert p.coeffs[0] == pytest.approx(1 / 3, abs=1e-12)


@pytest.mark.parametrize("family,k", [("CG", 2), ("DG", 1)])
def test_idempotence(family, k):
    V = FunctionSpace(build_structured(4, 4), family, k)
    rng = np.random.default_rng(0)
    for _ in range(5):
        v = FeFunction(V, rng.normal(size=V.n_dofs))
        p = l2_project(V, v, solver_tol=1e-13)
        assert np.abs(p.coeffs - v.coeffs).max() <= 1e-9


def test_galerkin_orthogonality():
    V = FunctionSpace(build_structured(5, 5), "CG", 2)
    u = smooth_field()
    p = l2_project(V, u, 10, solver_tol=1e-12)
    r = galerkin_residual(p, u, 10)
    b_scale = np.abs(assemble_mass(V).matvec(p.coeffs)).max()
    assert np.abs(r).max() <= 1e-10 * b_scale


def test_source_must_share_mesh():
    a = FunctionSpace(build_structured(2, 2), "DG", 1)
    b = FunctionSpace(build_structured(2, 2), "CG", 1)
    with pytest.raises(ValueError):
        ProjectionProblem(b, FeFunction(a))


def test_best_approximation_and_stability():
    u = smooth_field()
    V = FunctionSpace(build_structured(6, 6), "CG", 2)
    p = l2_project(V, u, 10, solver_tol=1e-12)
    assert l2_error(p, u, 10) <= l2_error(interpolate(V, u), u, 10) + 1e-8
    rng = np.random.default_rng(7)
    W = FunctionSpace(V.mesh, "DG", 1)
    for _ in range(5):
        w = FeFunction(W, rng.normal(size=W.n_dofs))
        assert l2_norm(l2_project(V, w)) <= l2_norm(w) * (1 + 1e-8)


@pytest.mark.parametrize("k", [1, 2])
def test_cg_output_is_continuous(k):
    m = refine(build_structured(3, 3), [0, 7, 9])
    W = FunctionSpace(m, "DG", k)
    w = FeFunction(W, np.random.default_rng(k).normal(size=W.n_dofs))
    assert max_edge_jump(w) > 1e-2
    p = l2_project(FunctionSpace(m, "CG", k), w)
    assert max_edge_jump(p) <= 1e-9 * np.abs(p.coeffs).max()


def test_filtered_derivative_rate():
    """CG_3 projection of the raw x-derivative of a CG_3 interpolant converges at order 3."""
    w = 4 * np.pi
    u = ScalarField(lambda x, y: -np.cos(w * x) * np.sin(w * y))
    ux = ScalarField(lambda x, y: w * np.sin(w * x) * np.sin(w * y))
    hs, errs = [], []
    for n in (8, 16, 32):
        V = FunctionSpace(build_structured(n, n), "CG", 3)
        p = l2_project(V, Derivative(interpolate(V, u), "dx"))
        assert max_edge_jump(p) <= 1e-9 * np.abs(p.coeffs).max()
        hs.append(1 / n)
        errs.append(l2_error(p, ux, 10))
    assert min(observed_orders(hs, errs)[1:]) >= 2.75


@pytest.mark.parametrize("family,k", [("CG", 1), ("CG", 2), ("DG", 1)])
def test_projection_rates(family, k):
    u = smooth_field()
    hs, l2, semi = [], [], []
    for n in (8, 16, 32, 64):
        p = l2_project(FunctionSpace(build_structured(n, n), family, k), u, 2 * k + 6)
        hs.append(1 / n)
        rep = h1_error(p, u, 2 * k + 6)
        l2.append(rep.l2_error)
        semi.append(rep.h1_seminorm_error)
    assert all(abs(o - (k + 1)) <= 0.15 for o in observed_orders(hs, l2)[1:])
    if family == "CG":
        assert all(abs(o - k) <= 0.15 for o in observed_orders(hs, semi)[1:])


def test_ratio_zero_for_reproduced_polynomial():
    u = ScalarField(lambda x, y: 1 + 2 * x - y, lambda x, y: (2.0, -1.0))
    V = FunctionSpace(build_structured(4, 4), "CG", 1)
    p = l2_project(V, u, solver_tol=1e-14)
    assert broken_estimate_ratio(u, p, 1, 1) == 0.0


def test_ratio_rejects_mismatch():
    u = ScalarField(lambda x, y: 1 + 2 * x - y, lambda x, y: (2.0, -1.0))
    V = FunctionSpace(build_structured(4, 4), "CG", 1)
    with pytest.raises(ArithmeticError):
        broken_estimate_ratio(u, FeFunction(V), 1, 1)


@pytest.mark.parametrize("family,k,t", [("CG", 1, 1), ("DG", 0, 0)])
def test_ratio_stable(family, k, t):
    u = smooth_field()
    ratios = []
    for n in (4, 8, 16, 32):
        p = l2_project(FunctionSpace(build_structured(n, n), family, k), u, 8)
        ratios.append(broken_estimate_ratio(u, p, k, t))
    assert max(ratios) / min(ratios) < 2.0
    assert all(np.isfinite(ratios))


def test_ratio_finite_difference_matches_analytic():
    u = smooth_field()
    p = l2_project(FunctionSpace(build_structured(8, 8), "CG", 2), u, 10)
    fd = broken_estimate_ratio(u, p, 2, 1)
    exact = broken_estimate_ratio(u, p, 2, 1, derivative_norm=smooth_field_derivative_norm(3))
    assert fd == pytest.approx(exact, rel=1e-4)


def test_project_with_explicit_problem():
    V = FunctionSpace(build_structured(3, 3), "CG", 1)
    prob = ProjectionProblem(V, ScalarField(lambda x, y: np.ones(np.shape(x))),
                             quadrature_degree=2, solver_tol=1e-12)
    assert np.allclose(project(prob).coeffs, 1.0, atol=1e-10)
