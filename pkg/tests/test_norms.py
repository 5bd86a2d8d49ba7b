import numpy as np
import pytest

from sisg.femspace import FeFunction, FunctionSpace, ScalarField, interpolate
from sisg.mesh import build_structured
from sisg.norms import ErrorField, broken_weighted_sum, default_quad_degree, h1_error, l2_error
from sisg.studies import observed_orders, smooth_field

UNIT = build_structured(4, 4)


def poly_field():
    return ScalarField(lambda x, y: x * x - 3 * x * y + 2 * y * y,
                       lambda x, y: (2 * x - 3 * y, -3 * x + 4 * y))


def test_interpolant_of_polynomial():
    f = interpolate(FunctionSpace(UNIT, "CG", 2), poly_field())
    assert l2_error(f, poly_field()) <= 1e-10
    rep = h1_error(f, poly_field())
    assert max(rep.l2_error, rep.h1_seminorm_error, rep.h1_error) <= 1e-10


def test_zero_against_one():
    f = FeFunction(FunctionSpace(UNIT, "CG", 1))
    assert l2_error(f, ScalarField(lambda x, y: np.ones(np.shape(x)))) == pytest.approx(1.0)


def test_zero_against_x():
    f = FeFunction(FunctionSpace(UNIT, "CG", 1))
    rep = h1_error(f, ScalarField(lambda x, y: x, lambda x, y: (1.0, 0.0)))
    assert rep.l2_error == pytest.approx(np.sqrt(1 / 3), rel=1e-13)
    assert rep.h1_seminorm_error == pytest.approx(1.0, rel=1e-13)
    assert rep.h1_error == pytest.approx(np.sqrt(4 / 3), rel=1e-13)
    assert rep.n_vertices == 25


def test_per_element_sums():
    u = smooth_field()
    rep = h1_error(interpolate(FunctionSpace(UNIT, "CG", 1), u), u)
    assert rep.per_element_l2_sq.sum() == pytest.approx(rep.l2_error ** 2, rel=1e-12)
    assert rep.per_element_seminorm_sq.sum() == pytest.approx(rep.h1_seminorm_error ** 2,
                                                               rel=1e-12)
    assert rep.h1_error >= max(rep.l2_error, rep.h1_seminorm_error)


def test_cg1_interpolant_rate():
    u = ScalarField(lambda x, y: np.sin(np.pi * x))
    hs, errs = [], []
    for n in (4, 8, 16, 32):
        hs.append(1 / n)
        errs.append(l2_error(interpolate(FunctionSpace(build_structured(n, n), "CG", 1), u), u))
    assert all(abs(o - 2.0) <= 0.1 for o in observed_orders(hs, errs)[1:])


def test_broken_sum_zero_and_consistent():
    V = FunctionSpace(UNIT, "CG", 2)
    p = poly_field()
    assert broken_weighted_sum(ErrorField(UNIT, interpolate(V, p), p), [(0, 0), (1, 2)]) <= 1e-20
    u = smooth_field()
    f = interpolate(FunctionSpace(UNIT, "CG", 1), u)
    assert broken_weighted_sum(ErrorField(UNIT, f, u), [(0, 0)], 8) == pytest.approx(
        l2_error(f, u, 8) ** 2, rel=1e-12)


def test_broken_sum_rejects_second_derivatives():
    with pytest.raises(ValueError):
        broken_weighted_sum(ErrorField(UNIT, None, smooth_field()), [(2, 4)])


def test_broken_sum_hypothesis_rate():
    u = smooth_field()
    sums = []
    for n in (8, 16):
        m = build_structured(n, n)
        f = interpolate(FunctionSpace(m, "CG", 1), u)
        sums.append(broken_weighted_sum(ErrorField(m, f, u), [(0, 0), (1, 2)], 8))
    assert sums[0] / sums[1] == pytest.approx(16, rel=0.2)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_quadrature_stability(k):
    u = smooth_field()
    f = interpolate(FunctionSpace(UNIT, "CG", k), u)
    q = default_quad_degree(f)
    a, b = h1_error(f, u), h1_error(f, u, q + 2)
    for name in ("l2_error", "h1_seminorm_error", "h1_error"):
        assert abs(getattr(a, name) - getattr(b, name)) < 1e-10 * getattr(a, name)


def test_triangle_inequality():
    rng = np.random.default_rng(5)
    V = FunctionSpace(UNIT, "CG", 2)
    for _ in range(10):
        f, g, e = (FeFunction(V, rng.normal(size=V.n_dofs)) for _ in range(3))
        fg = FeFunction(V, f.coeffs - g.coeffs)
        fe = FeFunction(V, f.coeffs - e.coeffs)
        eg = FeFunction(V, e.coeffs - g.coeffs)
        assert l2_error(fg, None) <= l2_error(fe, None) + l2_error(eg, None) + 1e-12


def test_evaluation_failure_propagates():
    def bad(x, y):
        raise ZeroDivisionError("boom")
    with pytest.raises(ZeroDivisionError):
        l2_error(FeFunction(FunctionSpace(UNIT, "CG", 1)), ScalarField(bad))
