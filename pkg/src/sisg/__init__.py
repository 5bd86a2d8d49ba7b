"""Smoothness-increasing Savitzky-Golay filtering for finite-element data."""
from .femspace import (Derivative, FeFunction, FunctionSpace, ScalarField, eval_basis,
                       eval_function, interpolate)
from .linalg import SparseMatrix, assemble, pcg_solve
from .mesh import Mesh, QualityReport, build_structured, quality_report, refine
from .norms import ErrorReport, h1_error, l2_error
from .quadrature import QuadratureRule, quad_rule
from .sisg_filter import ProjectionProblem, assemble_mass, broken_estimate_ratio, project

__all__ = [
    "Derivative", "FeFunction", "FunctionSpace", "ScalarField", "eval_basis", "eval_function",
    "interpolate", "SparseMatrix", "assemble", "pcg_solve", "Mesh", "QualityReport",
    "build_structured", "quality_report", "refine", "ErrorReport", "h1_error", "l2_error",
    "QuadratureRule", "quad_rule", "ProjectionProblem", "assemble_mass",
    "broken_estimate_ratio", "project",
]
