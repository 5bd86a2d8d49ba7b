from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sisg.savgol1d import SGWindow, apply, fit_window, kernel


def lstsq_kernel(r, k, offset, deriv=0, h=1.0):
    """Oracle: fit each unit vector by lstsq and read off the derivative at the offset."""
    x = (np.arange(1, r + 1) - offset) * h
    V = np.vander(x, k + 1, increasing=True)
    out = np.empty(r)
    for i in range(r):
        e = np.zeros(r)
        e[i] = 1.0
        c = np.linalg.lstsq(V, e, rcond=None)[0]
        out[i] = np.polynomial.polynomial.polyder(c, deriv)[0] if deriv else c[0]
    return out


def test_classic_quadratic_kernel():
    w = SGWindow(5, 2)
    expected = np.array([-3, 12, 17, 12, -3]) / 35
    assert np.abs(kernel(w) - expected).max() <= 1e-12
    assert np.abs(lstsq_kernel(5, 2, 3) - expected).max() <= 1e-12


def test_fit_window_center_value():
    c = fit_window(SGWindow(5, 2), [0, 0, 1, 0, 0])
    assert c[0] == pytest.approx(17 / 35, abs=1e-14)


@pytest.mark.parametrize("r,k,off,d", [(7, 3, 4, 0), (7, 3, 1, 1), (9, 4, 9, 2), (6, 2, 3, 1)])
def test_kernel_matches_oracle(r, k, off, d):
    w = SGWindow(r, k, 0.5, off, d)
    assert np.allclose(kernel(w), lstsq_kernel(r, k, off, d, 0.5), atol=1e-10)


def test_polynomial_reproduction():
    w = SGWindow(7, 3)
    x = w.nodes()
    y = 1 - 2 * x + 0.5 * x ** 2 + 0.1 * x ** 3
    c = fit_window(w, y)
    assert np.allclose(c, [1, -2, 0.5, 0.1], atol=1e-12)
    V = np.vander(x, 4, increasing=True)
    assert np.linalg.norm(V @ c - y) <= 1e-10


@pytest.mark.parametrize("k", [0, 1, 3])
def test_constant_fit(k):
    c = fit_window(SGWindow(6, k), np.full(6, 2.5))
    assert c[0] == pytest.approx(2.5)
    assert np.allclose(c[1:], 0, atol=1e-12)


@pytest.mark.parametrize("r,k,off", [(5, 2, 3), (8, 3, 2), (11, 4, 6)])
def test_kernel_moments(r, k, off):
    assert kernel(SGWindow(r, k, 1.0, off, 0)).sum() == pytest.approx(1.0, abs=1e-12)
    w = SGWindow(r, k, 0.25, off, 1)
    c = kernel(w)
    assert c.sum() == pytest.approx(0.0, abs=1e-10)
    assert c @ w.nodes() == pytest.approx(1.0, abs=1e-10)


def test_window_validation():
    with pytest.raises(ValueError):
        SGWindow(3, 3)
    with pytest.raises(ValueError):
        SGWindow(5, 2, deriv=3)
    with pytest.raises(ValueError):
        SGWindow(5, 2, eval_offset=6)


def test_apply_constant_and_derivative():
    w = SGWindow(5, 2)
    assert np.allclose(apply(w, np.full(20, 3.0)), 3.0)
    h = 0.1
    t = np.arange(30) * h
    y = 2 + t - 0.3 * t ** 2
    wd = SGWindow(7, 2, h, None, 1)
    out = apply(wd, y)
    assert len(out) == 30 - 7 + 1
    assert np.abs(out - (1 - 0.6 * t[3:3 + len(out)])).max() <= 1e-10


def test_apply_too_short():
    with pytest.raises(ValueError):
        apply(SGWindow(5, 2), np.ones(4))


def test_noisy_sine_variance_reduced():
    rng = np.random.default_rng(42)
    t = np.linspace(0, 4 * np.pi, 400)
    truth = np.sin(t)
    y = truth + 0.2 * rng.normal(size=t.size)
    w = SGWindow(11, 3)
    out = apply(w, y)
    mid = truth[5:5 + len(out)]
    assert np.var(out - mid) < np.var(y[5:5 + len(out)] - mid)


def test_residual_orthogonal_to_polynomials():
    rng = np.random.default_rng(3)
    w = SGWindow(9, 3)
    y = rng.normal(size=9)
    x = w.nodes()
    resid = np.vander(x, 4, increasing=True) @ fit_window(w, y) - y
    for j in range(4):
        assert abs(resid @ x ** j) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=9, max_size=9))
def test_kernel_is_fit_and_evaluate(y):
    y = np.array(y)
    w = SGWindow(9, 4, 1.0, 3, 1)
    c = fit_window(w, y)
    via_kernel = kernel(w) @ y
    assert via_kernel == pytest.approx(c[1], rel=1e-12, abs=1e-9)


def test_rational_form_of_quadratic_kernel():
    fr = [Fraction(float(v)).limit_denominator(10 ** 6) for v in kernel(SGWindow(5, 2))]
    assert fr == [Fraction(n, 35) for n in (-3, 12, 17, 12, -3)]
