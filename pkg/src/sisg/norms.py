"""L2, H1 and broken (elementwise, mesh-weighted) error quantities."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from ._parallel import map_elements
from .femspace import Derivative, FeFunction, ScalarField, geometry, source_values
from .mesh import Mesh, quality_report
from .quadrature import MAX_DEGREE, quad_rule


@dataclass(frozen=True)
class ErrorReport:
    l2_error: float
    h1_seminorm_error: float
    h1_error: float
    n_vertices: int
    per_element_l2_sq: Optional[np.ndarray] = None
    per_element_seminorm_sq: Optional[np.ndarray] = None


class ErrorField:
    """Difference ``approx - exact`` restricted elementwise.

    Either side may be ``None`` (treated as zero).  ``approx`` may be an
    FE function, a derivative of one, or an analytic field.
    """

    def __init__(self, mesh: Mesh, approx=None, exact: Optional[ScalarField] = None):
        if approx is None and exact is None:
            raise ValueError("need at least one of approx and exact")
        if approx is not None and not isinstance(approx, ScalarField) \
                and approx.space.mesh is not mesh:
            raise ValueError("approximation lives on a different mesh")
        self.mesh = mesh
        self.approx = approx
        self.exact = exact

    def _values(self, pts, geom, sl):
        out = 0.0
        if self.approx is not None:
            out = source_values(self.approx, pts, geom, sl)
        if self.exact is not None:
            out = out - self.exact.sample(geom.to_physical(pts, sl))
        return out

    def _grads(self, pts, geom, sl):
        out = 0.0
        if self.approx is not None:
            if isinstance(self.approx, FeFunction):
                out = self.approx.gradients_at(pts, sl)
            elif isinstance(self.approx, ScalarField):
                gx, gy = self.approx.grad(*np.moveaxis(geom.to_physical(pts, sl), -1, 0))
                out = np.stack([gx, gy], axis=-1)
            else:
                raise ValueError("gradient of a derivative source is not available")
        if self.exact is not None:
            gx, gy = self.exact.grad(*np.moveaxis(geom.to_physical(pts, sl), -1, 0))
            out = out - np.stack([gx, gy], axis=-1)
        return out

    def elementwise_sq(self, m: int, quad_degree: int) -> np.ndarray:
        """Squared L2(e) norm of the m-th derivative tensor of the error, per element."""
        if m not in (0, 1):
            raise ValueError(f"derivative order {m} not computable (only 0 and 1)")
        rule = quad_rule(quad_degree)
        geom = geometry(self.mesh)

        def part(sl):
            if m == 0:
                sq = np.square(self._values(rule.points, geom, sl))
            else:
                sq = np.sum(np.square(self._grads(rule.points, geom, sl)), axis=-1)
            sq = np.broadcast_to(sq, (len(geom.det[sl]), len(rule)))
            return geom.det[sl] * (sq @ rule.weights)

        return map_elements(self.mesh.n_triangles, part)


def _mesh_of(f):
    return f.space.mesh


def default_quad_degree(f) -> int:
    # oversampled so that non-polynomial exact fields are integrated to ~1e-12 relative
    return min(2 * f.space.degree + 8, MAX_DEGREE)


def l2_error(f, exact: Optional[ScalarField], quad_degree: Optional[int] = None) -> float:
    """``||f - exact||_{L2}`` by elementwise quadrature."""
    q = default_quad_degree(f) if quad_degree is None else quad_degree
    return float(np.sqrt(np.sum(ErrorField(_mesh_of(f), f, exact).elementwise_sq(0, q))))


def l2_norm(f, quad_degree: Optional[int] = None) -> float:
    return l2_error(f, None, quad_degree)


def h1_error(f: FeFunction, exact: ScalarField, quad_degree: Optional[int] = None) -> ErrorReport:
    """L2, H1-seminorm and full H1 errors of ``f`` against ``exact``."""
    if exact is not None and exact.gradient is None:
        raise ValueError("exact field needs a gradient")
    q = default_quad_degree(f) if quad_degree is None else quad_degree
    err = ErrorField(_mesh_of(f), f, exact)
    l2 = err.elementwise_sq(0, q)
    semi = err.elementwise_sq(1, q)
    a, b = float(np.sqrt(l2.sum())), float(np.sqrt(semi.sum()))
    return ErrorReport(l2_error=a, h1_seminorm_error=b, h1_error=float(np.hypot(a, b)),
                       n_vertices=_mesh_of(f).n_vertices,
                       per_element_l2_sq=l2, per_element_seminorm_sq=semi)


def broken_weighted_sum(f_err: ErrorField, powers, quad_degree: int = 8,
                        h: Optional[np.ndarray] = None) -> float:
    """Sum over (m, p) in ``powers`` of  sum_e h_e**p * ||grad^m err||^2_{L2(e)}.

    The usual mesh-balanced form uses ``p = 2 m``.  ``h`` defaults to the
    enclosing-circle diameters of the elements.
    """
    if h is None:
        h = quality_report(f_err.mesh).h
    total = 0.0
    for m, p in powers:
        if m >= 2:
            raise ValueError(f"derivative order {m} not computable (only 0 and 1)")
        total += float(np.sum(h ** p * f_err.elementwise_sq(m, quad_degree)))
    return total


def _central_weights(order):
    return [(order / 2 - i, (-1) ** i * comb(order, i)) for i in range(order + 1)]


def derivative_tensor_norm(field: ScalarField, order: int, x, y, step: float = 2e-3):
    """Euclidean norm of the order-``order`` derivative tensor by central differences.

    Uses |grad^m u|^2 = sum_{a+b=m} C(m, a) (d^a_x d^b_y u)^2.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    total = np.zeros(np.broadcast(x, y).shape)
    for a in range(order + 1):
        b = order - a
        acc = np.zeros_like(total)
        for sx, wx in _central_weights(a):
            for sy, wy in _central_weights(b):
                acc += wx * wy * field.value(x + sx * step, y + sy * step)
        acc /= step ** order
        total += comb(order, a) * acc ** 2
    return np.sqrt(total)


def derivative_tensor_sq_elementwise(mesh: Mesh, field: ScalarField, order: int,
                                     quad_degree: int, norm_fn=None) -> np.ndarray:
    """Per-element integral of |grad^order u|^2."""
    rule = quad_rule(quad_degree)
    geom = geometry(mesh)
    xy = geom.to_physical(rule.points)
    if norm_fn is None:
        vals = derivative_tensor_norm(field, order, xy[..., 0], xy[..., 1])
    else:
        vals = np.broadcast_to(norm_fn(xy[..., 0], xy[..., 1]), xy.shape[:-1])
    return geom.det * (np.square(vals) @ rule.weights)
