"""Shared numerical-rank conventions.

Every rank decision in the library uses the same relative cutoff:
a singular value counts toward the rank when it exceeds
``max(rows, cols) * machine_eps * sigma_max``.
"""

from __future__ import annotations

import numpy as np

EPS = float(np.finfo(np.float64).eps)


def rank_tolerance(shape: tuple[int, int], sigma_max: float) -> float:
    """Absolute singular-value cutoff for a matrix of the given shape."""
    return max(shape) * EPS * sigma_max


def numerical_rank(matrix: np.ndarray) -> int:
    """Rank of ``matrix`` under the shared singular-value cutoff."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0
    svals = np.linalg.svd(matrix, compute_uv=False)
    if svals[0] == 0.0:
        return 0
    return int(np.count_nonzero(svals > rank_tolerance(matrix.shape, svals[0])))


def spectral_norm(matrix: np.ndarray) -> float:
    """Largest singular value of ``matrix``."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.svd(matrix, compute_uv=False)[0])
