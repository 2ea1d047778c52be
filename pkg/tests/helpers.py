"""Shared generators for randomized tests."""

from __future__ import annotations

import numpy as np

from subpred import StateSpaceModel
from subpred.grassmann import BehaviorBasis
from subpred.hankel import PartitionedMatrix


def random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def conditioned_invertible(rng: np.random.Generator, d: int, cond: float) -> np.ndarray:
    """Random invertible d x d matrix with condition number exactly ``cond``."""
    if d == 1:
        return np.array([[1.0]])
    svals = np.geomspace(np.sqrt(cond), 1.0 / np.sqrt(cond), d)
    return random_orthogonal(rng, d) * svals @ random_orthogonal(rng, d)


def _ctrb(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def _obsv(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def random_model(
    rng: np.random.Generator,
    n: int | None = None,
    m: int | None = None,
    p: int | None = None,
    spectral_radius: float = 0.95,
) -> StateSpaceModel:
    """Random stable model, redrawn until observable and controllable."""
    n = n if n is not None else int(rng.integers(1, 5))
    m = m if m is not None else int(rng.integers(1, 3))
    p = p if p is not None else int(rng.integers(1, 3))
    while True:
        A = rng.standard_normal((n, n))
        radius = max(abs(np.linalg.eigvals(A)))
        if radius > 0:
            A *= spectral_radius * rng.uniform(0.5, 1.0) / radius
        B = rng.standard_normal((n, m))
        C = rng.standard_normal((p, n))
        D = rng.standard_normal((p, m))
        if np.linalg.matrix_rank(_ctrb(A, B)) == n and np.linalg.matrix_rank(_obsv(A, C)) == n:
            return StateSpaceModel(A=A, B=B, C=C, D=D)


def unobservable_model(n: int = 2, m: int = 1) -> StateSpaceModel:
    """Diagonal model with a repeated mode seen through one coordinate only,
    unobservable for every window length."""
    A = 0.5 * np.eye(n)
    B = np.ones((n, m))
    C = np.zeros((1, n))
    C[0, 0] = 1.0
    return StateSpaceModel(A=A, B=B, C=C, D=np.zeros((1, m)))


def random_basis(
    rng: np.random.Generator,
    dims: tuple[int, int, int, int],
    r: int,
) -> BehaviorBasis:
    """Random point on the Grassmannian, wrapped with the given partition."""
    m, p, Tini, Tf = dims
    q = (m + p) * (Tini + Tf)
    Q, _ = np.linalg.qr(rng.standard_normal((q, r)))
    return BehaviorBasis(PartitionedMatrix(data=Q, m=m, p=p, Tini=Tini, Tf=Tf))
