"""Savitzky-Golay smoothing and differentiation of uniformly spaced samples.

A window of ``r`` samples is fitted by least squares with a polynomial of
degree ``k``; the fit (or its derivative) is evaluated at one window
position.  Because the fit is an orthogonal projection onto polynomials,
the whole procedure is a fixed linear functional of the window, i.e. a
convolution kernel.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve


@dataclass(frozen=True)
class SGWindow:
    """Window length ``r``, degree ``k``, spacing ``h``.

    ``eval_offset`` is the 1-based window position where the fit is
    evaluated (default: the centre, rounded down for even ``r``).
    """
    r: int
    k: int
    h: float = 1.0
    eval_offset: Optional[int] = None
    deriv: int = 0

    def __post_init__(self):
        if self.k < 0 or self.r <= self.k:
            raise ValueError(f"need window length r > degree k, got r={self.r}, k={self.k}")
        if not 0 <= self.deriv <= self.k:
            raise ValueError(f"derivative order must be in 0..k, got {self.deriv}")
        if self.h <= 0:
            raise ValueError("sample spacing must be positive")
        if self.eval_offset is None:
            object.__setattr__(self, "eval_offset", (self.r + 1) // 2)
        if not 1 <= self.eval_offset <= self.r:
            raise ValueError(f"eval_offset must be in 1..{self.r}")

    def nodes(self) -> np.ndarray:
        """Sample positions relative to the evaluation point."""
        return (np.arange(1, self.r + 1) - self.eval_offset) * self.h


def _vandermonde(w: SGWindow) -> np.ndarray:
    return np.vander(w.nodes(), w.k + 1, increasing=True)


def fit_window(w: SGWindow, y) -> np.ndarray:
    """Least-squares polynomial coefficients, ascending powers about the evaluation point.

    Solves the normal equations ``(V^T V) c = V^T y`` by Cholesky, where
    ``(V^T V)_ij = sum_l x_l^i x_l^j`` is the Gram matrix of the monomials
    in the discrete inner product of the window.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (w.r,):
        raise ValueError(f"expected {w.r} samples, got shape {y.shape}")
    V = _vandermonde(w)
    return cho_solve(cho_factor(V.T @ V), V.T @ y)


def kernel(w: SGWindow) -> np.ndarray:
    """Weights ``c`` with ``c @ y`` equal to the ``deriv``-th derivative of the fit.

    Row ``deriv`` of ``(V^T V)^{-1} V^T``, scaled by ``deriv!``.
    """
    V = _vandermonde(w)
    sol = cho_solve(cho_factor(V.T @ V), V.T)
    return factorial(w.deriv) * sol[w.deriv]


def apply(w: SGWindow, series) -> np.ndarray:
    """Slide the kernel over ``series``; valid region only (length n - r + 1)."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or len(series) < w.r:
        raise ValueError(f"series must be 1-D with at least {w.r} samples")
    windows = np.lib.stride_tricks.sliding_window_view(series, w.r)
    return windows @ kernel(w)
