"""Convergence studies on uniform meshes of the unit square."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np

from .femspace import FunctionSpace, ScalarField, interpolate
from .mesh import Mesh, build_structured
from .norms import ErrorField, broken_weighted_sum, h1_error, l2_error
from .sisg_filter import broken_estimate_ratio, l2_project

CASES = ("l2-rates", "h1-rates", "hypothesis", "theorem-ratio")


def smooth_field() -> ScalarField:
    """u = sin(pi x) cos(pi y)."""
    p = np.pi
    return ScalarField(lambda x, y: np.sin(p * x) * np.cos(p * y),
                       lambda x, y: (p * np.cos(p * x) * np.cos(p * y),
                                     -p * np.sin(p * x) * np.sin(p * y)))


def smooth_field_derivative_norm(order: int):
    """Exact |grad^order u| for u = sin(pi x) cos(pi y)."""
    def norm(x, y):
        total = 0.0
        for a in range(order + 1):
            b = order - a
            fx = np.sin(np.pi * x) if a % 2 == 0 else np.cos(np.pi * x)
            fy = np.cos(np.pi * y) if b % 2 == 0 else np.sin(np.pi * y)
            total = total + comb(order, a) * (fx * fy) ** 2
        return np.pi ** order * np.sqrt(total)
    return norm


def observed_orders(h, err) -> list:
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    out = [float("nan")]
    for i in range(1, len(h)):
        out.append(float(np.log(err[i - 1] / err[i]) / np.log(h[i - 1] / h[i])))
    return out


@dataclass
class StudyTable:
    columns: list
    rows: list = field(default_factory=list)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        def fmt(v):
            return str(v) if isinstance(v, (int, np.integer)) else f"{v:.6e}"
        lines = [",".join(self.columns)]
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def uniform_meshes(levels: int, n0: int = 4) -> list:
    return [build_structured(n0 * 2 ** l, n0 * 2 ** l) for l in range(levels)]


def run_case(case: str, family: str, degree: int, levels: int, n0: int = 4,
             quad_degree: Optional[int] = None, solver_tol: float = 1e-10) -> StudyTable:
    """Tabulate one convergence study for u = sin(pi x) cos(pi y)."""
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}")
    family = family.upper()
    if case == "h1-rates" and family != "CG":
        raise ValueError("h1-rates needs a CG family")
    if levels < 2:
        raise ValueError("need at least two levels")
    u = smooth_field()
    q = 2 * degree + 6 if quad_degree is None else quad_degree
    meshes = uniform_meshes(levels, n0)
    hs = [1.0 / (n0 * 2 ** l) for l in range(levels)]
    spaces = [FunctionSpace(m, family, degree) for m in meshes]

    if case == "theorem-ratio":
        t = spaces[0].continuity_order
        ratios = [broken_estimate_ratio(u, l2_project(V, u, q, solver_tol), degree, t, q,
                                        smooth_field_derivative_norm(degree + 1))
                  for V in spaces]
        tab = StudyTable(["n", "h", "n_dofs", "ratio"])
        for m, h, V, r in zip(meshes, hs, spaces, ratios):
            tab.rows.append([int(round(1 / h)), h, V.n_dofs, r])
        return tab

    if case == "hypothesis":
        l2s, broken = [], []
        for V in spaces:
            err = ErrorField(V.mesh, interpolate(V, u), u)
            l2s.append(np.sqrt(broken_weighted_sum(err, [(0, 0)], q)))
            if V.continuity_order >= 1:
                broken.append(np.sqrt(broken_weighted_sum(err, [(1, 2)], q)))
            else:
                broken.append(float("nan"))
        tab = StudyTable(["n", "h", "n_dofs", "l2_interp_error", "l2_order",
                          "weighted_grad_error", "weighted_grad_order"])
        for row in zip(hs, spaces, l2s, observed_orders(hs, l2s), broken,
                       observed_orders(hs, broken)):
            h, V = row[0], row[1]
            tab.rows.append([int(round(1 / h)), h, V.n_dofs, *row[2:]])
        return tab

    projs = [l2_project(V, u, q, solver_tol) for V in spaces]
    if case == "l2-rates":
        errs = [l2_error(p, u, q) for p in projs]
        name = "l2_error"
    else:
        errs = [h1_error(p, u, q).h1_seminorm_error for p in projs]
        name = "h1_seminorm_error"
    tab = StudyTable(["n", "h", "n_dofs", name, "order"])
    for h, V, e, o in zip(hs, spaces, errs, observed_orders(hs, errs)):
        tab.rows.append([int(round(1 / h)), h, V.n_dofs, e, o])
    return tab
