"""Quadrature on the reference triangle {x >= 0, y >= 0, x + y <= 1}."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 20


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray   # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,), summing to 1/2
    exactness_degree: int

    def __len__(self):
        return len(self.weights)


def _radon7():
    s = np.sqrt(15.0)
    a, b = (6.0 - s) / 21.0, (6.0 + s) / 21.0
    wa, wb = (155.0 - s) / 1200.0, (155.0 + s) / 1200.0
    pts = [(1 / 3, 1 / 3),
           (a, a), (1 - 2 * a, a), (a, 1 - 2 * a),
           (b, b), (1 - 2 * b, b), (b, 1 - 2 * b)]
    w = [9 / 40, wa, wa, wa, wb, wb, wb]
    return np.array(pts), 0.5 * np.array(w)


def _collapsed(degree):
    # Gauss-Jacobi in the collapsed direction absorbs the Duffy Jacobian.
    n = degree // 2 + 1
    xi, wx = roots_legendre(n)
    eta, we = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (1.0 + eta)          # collapsed coordinate (maps to x)
    t = 0.5 * (1.0 + xi)
    X = s[:, None] * np.ones_like(t)[None, :]
    Y = (1.0 - s)[:, None] * t[None, :]
    # d(x, y) = (1 - s) ds dt;  jacobi weight is (1 - eta) = 2 (1 - s)
    W = (we[:, None] * wx[None, :]) * 0.125
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


@lru_cache(maxsize=None)
def quad_rule(exactness_degree: int) -> QuadratureRule:
    """Positive-weight rule exact for polynomials of total degree ``exactness_degree``.

    Degrees 0-1 use the centroid, 2 the three-point interior rule, 3-5 the
    seven-point Radon rule; higher degrees use a collapsed Gauss-Jacobi
    tensor rule.
    """
    d = int(exactness_degree)
    if d != exactness_degree or not 0 <= d <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {exactness_degree!r} "
                         f"(0..{MAX_DEGREE})")
    if d <= 1:
        pts, w = np.array([[1 / 3, 1 / 3]]), np.array([0.5])
    elif d == 2:
        pts = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        w = np.full(3, 1 / 6)
    elif d <= 5:
        pts, w = _radon7()
    else:
        pts, w = _collapsed(d)
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(pts, w, d)
