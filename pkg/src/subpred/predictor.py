"""The subspace predictor: output prediction from a behavior data matrix or
an orthonormal behavior basis.

Given a partitioned matrix X and a context b = (u_ini, u, y_ini), the
predicted future output is  y_future_rows(X) @ pinv(context_rows(X)) @ b.
The prediction depends only on the column space of X, not on the particular
spanning matrix, as long as the context rows have full column rank; that
invariance is the core property exercised by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ._linalg import EPS, rank_tolerance
from .errors import RankDeficientError
from .grassmann import BehaviorBasis
from .hankel import PartitionedMatrix
from .lti import Trajectory

__all__ = [
    "PredictionContext",
    "Prediction",
    "pseudoinverse",
    "subspace_predict",
    "predict_from_subspace",
    "one_step",
    "rolling_one_step",
    "context_windows",
]


def _pinv_parts(M: np.ndarray, rtol: float | None):
    """SVD pseudoinverse plus diagnostics (retained rank, smallest sigma)."""
    M = np.asarray(M, dtype=float)
    U, svals, Vt = np.linalg.svd(M, full_matrices=False)
    if rtol is None:
        rtol = max(M.shape) * EPS
    if svals.size == 0 or svals[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0])), 0, 0.0
    cutoff = rtol * svals[0]
    keep = svals > cutoff
    inv = np.zeros_like(svals)
    inv[keep] = 1.0 / svals[keep]
    pinv = (Vt.T * inv) @ U.T
    return pinv, int(np.count_nonzero(keep)), float(svals[-1])


def pseudoinverse(M, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse via SVD.

    Singular values at or below ``rtol * sigma_max`` are treated as zero;
    the default rtol is max(rows, cols) * machine_eps.  A zero matrix maps
    to a zero matrix.
    """
    pinv, _, _ = _pinv_parts(M, rtol)
    return pinv


@dataclass(frozen=True, eq=False)
class PredictionContext:
    """The vector b = (u_ini, u, y_ini) together with its window dimensions.

    ``u_ini`` has length m*Tini, ``u`` length m*Tf, ``y_ini`` length p*Tini.
    """

    u_ini: np.ndarray
    u: np.ndarray
    y_ini: np.ndarray
    m: int
    p: int
    Tini: int
    Tf: int

    def __post_init__(self):
        if min(self.m, self.p, self.Tini, self.Tf) < 1:
            raise ValueError(
                f"dims must be positive, got (m={self.m}, p={self.p}, "
                f"Tini={self.Tini}, Tf={self.Tf})"
            )
        for name, value, expected in (
            ("u_ini", self.u_ini, self.m * self.Tini),
            ("u", self.u, self.m * self.Tf),
            ("y_ini", self.y_ini, self.p * self.Tini),
        ):
            arr = np.asarray(value, dtype=float).reshape(-1).copy()
            if arr.shape[0] != expected:
                raise ValueError(f"{name} has length {arr.shape[0]}, expected {expected}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def b(self) -> np.ndarray:
        """The stacked context vector, length m*Tini + m*Tf + p*Tini."""
        return np.concatenate([self.u_ini, self.u, self.y_ini])

    @classmethod
    def from_windows(cls, u_past, u_future, y_past) -> "PredictionContext":
        """Build from time-major windows of shapes (Tini, m), (Tf, m), (Tini, p)."""
        u_past = np.atleast_2d(np.asarray(u_past, dtype=float))
        u_future = np.atleast_2d(np.asarray(u_future, dtype=float))
        y_past = np.atleast_2d(np.asarray(y_past, dtype=float))
        if u_past.shape[1] != u_future.shape[1]:
            raise ValueError(
                f"input widths differ between windows: {u_past.shape[1]} vs {u_future.shape[1]}"
            )
        if u_past.shape[0] != y_past.shape[0]:
            raise ValueError(
                f"past windows differ in length: {u_past.shape[0]} vs {y_past.shape[0]}"
            )
        return cls(
            u_ini=u_past.reshape(-1),
            u=u_future.reshape(-1),
            y_ini=y_past.reshape(-1),
            m=u_past.shape[1],
            p=y_past.shape[1],
            Tini=u_past.shape[0],
            Tf=u_future.shape[0],
        )


@dataclass(frozen=True, eq=False)
class Prediction:
    """Predicted future output of length p*Tf, with solver diagnostics."""

    y_pred: np.ndarray
    sigma_min: float
    effective_rank: int
    p: int


def _check_dims(X, ctx: PredictionContext) -> None:
    if (X.m, X.p, X.Tini, X.Tf) != (ctx.m, ctx.p, ctx.Tini, ctx.Tf):
        raise ValueError(
            f"matrix dims (m={X.m}, p={X.p}, Tini={X.Tini}, Tf={X.Tf}) do not match "
            f"context dims (m={ctx.m}, p={ctx.p}, Tini={ctx.Tini}, Tf={ctx.Tf})"
        )


def subspace_predict(X: PartitionedMatrix, ctx: PredictionContext) -> Prediction:
    """Apply the subspace predictor for an arbitrary partitioned data matrix.

    The map is linear in the context and defined for any b, whether or not
    (u_ini, y_ini) is a genuine trajectory window.
    """
    _check_dims(X, ctx)
    pinv, rank, sigma_min = _pinv_parts(X.context_block, None)
    y_pred = X.y_future @ (pinv @ ctx.b)
    return Prediction(y_pred=y_pred, sigma_min=sigma_min, effective_rank=rank, p=ctx.p)


def predict_from_subspace(U: BehaviorBasis, ctx: PredictionContext) -> Prediction:
    """Apply the subspace predictor to an orthonormal behavior basis.

    Requires the context rows of the basis to have full column rank; the
    prediction then agrees with `subspace_predict` on any full-rank matrix
    spanning the same subspace.
    """
    _check_dims(U.basis, ctx)
    M = U.context_block
    svals = np.linalg.svd(M, compute_uv=False)
    if svals[-1] <= rank_tolerance(M.shape, float(svals[0])):
        raise RankDeficientError(
            f"context rows of the basis are rank deficient: "
            f"sigma_min = {svals[-1]:.3e}"
        )
    return subspace_predict(U.basis, ctx)


def one_step(pred: Prediction) -> np.ndarray:
    """First predicted output vector (the first p entries of y_pred)."""
    return pred.y_pred[: pred.p]


def context_windows(
    measured: Trajectory, Tini: int, Tf: int
) -> Iterator[tuple[int, PredictionContext]]:
    """Sliding windows (t, context) over a measured trajectory.

    t runs from Tini through T - Tf inclusive, the last step for which the
    future input window still fits inside the data.
    """
    if min(Tini, Tf) < 1:
        raise ValueError(f"Tini and Tf must be positive, got ({Tini}, {Tf})")
    T = measured.length
    if T < Tini + Tf:
        raise ValueError(f"trajectory length {T} is shorter than Tini+Tf = {Tini + Tf}")
    for t in range(Tini, T - Tf + 1):
        yield t, PredictionContext.from_windows(
            u_past=measured.inputs[t - Tini : t],
            u_future=measured.inputs[t : t + Tf],
            y_past=measured.outputs[t - Tini : t],
        )


def rolling_one_step(
    U: BehaviorBasis, measured: Trajectory, Tini: int, Tf: int
) -> np.ndarray:
    """One-step predictions over every sliding window of a measured
    trajectory; shape (T - Tini - Tf + 1, p)."""
    out = [one_step(predict_from_subspace(U, ctx)) for _, ctx in context_windows(measured, Tini, Tf)]
    return np.array(out)
