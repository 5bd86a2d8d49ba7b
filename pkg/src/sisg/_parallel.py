"""Element-chunked evaluation with a deterministic merge.

Work is split into contiguous element ranges; results are concatenated in
element order, so the output does not depend on the thread count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

_num_threads = 1
_CHUNK = 4096


def set_num_threads(n: int) -> None:
    global _num_threads
    if int(n) < 1:
        raise ValueError("thread count must be >= 1")
    _num_threads = int(n)


def get_num_threads() -> int:
    return _num_threads


def map_elements(n_elements: int, fn):
    """Apply ``fn(slice)`` over element chunks and concatenate along axis 0."""
    if _num_threads == 1 or n_elements <= _CHUNK:
        return fn(slice(0, n_elements))
    bounds = list(range(0, n_elements, _CHUNK)) + [n_elements]
    slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=_num_threads) as pool:
        parts = list(pool.map(fn, slices))
    return np.concatenate(parts, axis=0)
