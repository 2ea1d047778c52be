"""Subspace geometry for behavior spaces: orthonormal bases, principal
angles, chordal distance, Procrustes alignment, and perturbed subspaces at a
prescribed distance.

Angles are computed from two SVDs: cosines from the product of the bases,
sines from the projection of one basis onto the orthogonal complement of the
other.  The sine route keeps full accuracy for nearly identical subspaces,
where arccos of a cosine loses half the significant digits; distances are
therefore always evaluated from the sines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ._linalg import rank_tolerance
from .errors import ConvergenceError, RankDeficientError
from .hankel import PartitionedMatrix

__all__ = [
    "BehaviorBasis",
    "PrincipalAngles",
    "orthonormal_basis",
    "principal_angles",
    "chordal_distance",
    "align_basis",
    "perturb_subspace",
    "save_basis",
    "load_basis",
]

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PrincipalAngles:
    """Canonical angles between two equal-rank subspaces.

    ``angles`` is nondecreasing in [0, pi/2]; ``cosines`` (nonincreasing) and
    ``sines`` (nondecreasing) are aligned index-wise with ``angles``.
    """

    angles: np.ndarray
    cosines: np.ndarray
    sines: np.ndarray


@dataclass(frozen=True, eq=False)
class BehaviorBasis:
    """An orthonormal spanning matrix of a behavior subspace.

    Wraps a PartitionedMatrix whose columns are orthonormal to within
    ``ORTHONORMALITY_TOL`` in Frobenius norm; construction rejects anything
    looser.  A basis with r columns in ambient dimension q represents a point
    on the Grassmannian of r-dimensional subspaces of R^q.
    """

    basis: PartitionedMatrix

    def __post_init__(self):
        mat = self.basis.data
        if mat.shape[1] > mat.shape[0]:
            raise ValueError(f"rank {mat.shape[1]} exceeds ambient dimension {mat.shape[0]}")
        gram_defect = np.linalg.norm(mat.T @ mat - np.eye(mat.shape[1]))
        if gram_defect > ORTHONORMALITY_TOL:
            raise ValueError(
                f"columns are not orthonormal: ||U'U - I||_F = {gram_defect:.3e}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return self.basis.data

    @property
    def q(self) -> int:
        return self.basis.q

    @property
    def r(self) -> int:
        return self.basis.r

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.basis.dims

    @property
    def context_block(self) -> np.ndarray:
        return self.basis.context_block

    @property
    def y_future(self) -> np.ndarray:
        return self.basis.y_future


def orthonormal_basis(X: PartitionedMatrix, r: int) -> BehaviorBasis:
    """Top-r left singular vectors of a data matrix, as a BehaviorBasis.

    The returned columns span the best rank-r approximation of the column
    space of ``X``.  Rejects the request when the r-th singular value falls
    under the shared rank cutoff, i.e. when r exceeds the numerical rank.
    """
    if not 1 <= r <= min(X.q, X.r):
        raise ValueError(f"rank r={r} out of range for a {X.q}x{X.r} matrix")
    U, svals, _ = np.linalg.svd(X.data, full_matrices=False)
    if svals[r - 1] <= rank_tolerance(X.data.shape, float(svals[0])):
        raise RankDeficientError(
            f"requested rank r={r} exceeds the numerical rank: "
            f"sigma_{r} = {svals[r - 1]:.3e} is below the cutoff"
        )
    return BehaviorBasis(X.with_data(np.ascontiguousarray(U[:, :r])))


def _check_comparable(U: BehaviorBasis, V: BehaviorBasis) -> None:
    if U.q != V.q:
        raise ValueError(f"ambient dimensions differ: {U.q} vs {V.q}")
    if U.r != V.r:
        raise ValueError(f"subspace ranks differ: {U.r} vs {V.r}")


def _angle_parts(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cosines (descending) and sines (ascending) of the principal angles
    between the column spans of two orthonormal matrices."""
    cross = A.T @ B
    cosines = np.clip(np.linalg.svd(cross, compute_uv=False), 0.0, 1.0)
    residual = B - A @ cross
    sines = np.linalg.svd(residual, compute_uv=False)
    sines = np.clip(sines[::-1], 0.0, 1.0)
    return cosines, sines


def _chordal(A: np.ndarray, B: np.ndarray) -> float:
    _, sines = _angle_parts(A, B)
    return float(np.linalg.norm(sines))


def principal_angles(U: BehaviorBasis, V: BehaviorBasis) -> PrincipalAngles:
    """Principal angles between two equal-rank behavior subspaces.

    Each angle is recovered from its (cosine, sine) pair via arctan2, which is
    accurate at both ends of [0, pi/2].
    """
    _check_comparable(U, V)
    cosines, sines = _angle_parts(U.matrix, V.matrix)
    angles = np.arctan2(sines, cosines)
    return PrincipalAngles(angles=angles, cosines=cosines, sines=sines)


def chordal_distance(U: BehaviorBasis, V: BehaviorBasis) -> float:
    """Chordal distance: the root of the sum of squared principal-angle sines.

    Internally cross-checked against the equivalent projector form
    ||UU' - VV'||_F / sqrt(2); disagreement beyond 1e-10 signals a numerical
    inconsistency and raises.  The value lies in [0, sqrt(r)] and does not
    depend on the choice of orthonormal bases.
    """
    _check_comparable(U, V)
    d = _chordal(U.matrix, V.matrix)
    A, B = U.matrix, V.matrix
    projector_form = np.linalg.norm(A @ A.T - B @ B.T) / np.sqrt(2.0)
    if abs(d - projector_form) > 1e-10:
        raise ArithmeticError(
            f"chordal distance formulas disagree: angles give {d!r}, "
            f"projectors give {projector_form!r}"
        )
    return d


def align_basis(U: BehaviorBasis, Uhat: BehaviorBasis) -> BehaviorBasis:
    """Rotate ``Uhat`` by the orthogonal matrix that brings it closest to
    ``U`` in Frobenius norm (the orthogonal Procrustes minimizer).

    The rotated basis spans the same subspace as ``Uhat``; the achieved gap
    satisfies ||U - aligned||_F^2 = 2r - 2*sum(cos(theta_i)) and is at most
    sqrt(2) times the chordal distance.
    """
    _check_comparable(U, Uhat)
    P, _, Qt = np.linalg.svd(U.matrix.T @ Uhat.matrix)
    rotation = Qt.T @ P.T
    return BehaviorBasis(Uhat.basis.with_data(Uhat.matrix @ rotation))


def perturb_subspace(U: BehaviorBasis, kappa: float, seed: int) -> BehaviorBasis:
    """A random subspace at chordal distance ``kappa`` from ``U``.

    Draws a random tangent direction (columns orthogonal to the span of U),
    orthonormalizes it by SVD, and walks the corresponding geodesic
    U(t) = U V cos(t*Theta) V' + W sin(t*Theta) V' with angle rates
    Theta scaled so every principal angle stays within [0, pi/2] at t = 1.
    The step length is solved by monotone bisection on the measured chordal
    distance, to |d - kappa| <= 1e-6 * max(1, kappa).  Deterministic for a
    fixed seed.
    """
    q, r = U.q, U.r
    if kappa < 0 or kappa > np.sqrt(r) * (1 - 1e-6):
        raise ValueError(f"kappa={kappa} out of range [0, sqrt(r))")
    if kappa == 0:
        return U
    reachable = np.sqrt(min(r, q - r))
    if kappa > reachable:
        raise ValueError(
            f"kappa={kappa} unreachable: at most sqrt(min(r, q-r)) = {reachable:.6g} "
            f"for subspaces of rank {r} in dimension {q}"
        )

    rng = np.random.default_rng(seed)
    base = U.matrix
    direction = rng.standard_normal((q, r))
    direction -= base @ (base.T @ direction)
    W, svals, Vt = np.linalg.svd(direction, full_matrices=False)
    rates = (np.pi / 2) * (svals / svals[0])
    V = Vt.T

    def point(t: float) -> np.ndarray:
        angle = t * rates
        return ((base @ V) * np.cos(angle)) @ V.T + (W * np.sin(angle)) @ V.T

    tol = 1e-6 * max(1.0, kappa)
    lo, hi = 0.0, 1.0
    top = _chordal(base, point(hi))
    if top + tol < kappa:
        raise ConvergenceError(
            f"drawn geodesic reaches distance {top:.6g} at full step, "
            f"short of the requested kappa={kappa}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        candidate = point(mid)
        d = _chordal(base, candidate)
        if abs(d - kappa) <= tol:
            return BehaviorBasis(U.basis.with_data(candidate))
        if d < kappa:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(
        f"bisection failed to reach kappa={kappa} within 200 iterations"
    )


# ---------------------------------------------------------------------------
# Basis files: one header line '# m=<m> p=<p> Tini=<Tini> Tf=<Tf> r=<r>'
# followed by q comma-separated rows of r entries.
# ---------------------------------------------------------------------------

_HEADER_RE = re.compile(
    r"^#\s*m=(\d+)\s+p=(\d+)\s+Tini=(\d+)\s+Tf=(\d+)\s+r=(\d+)\s*$"
)


def save_basis(path, basis: BehaviorBasis) -> None:
    m, p, Tini, Tf = basis.dims
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# m={m} p={p} Tini={Tini} Tf={Tf} r={basis.r}\n")
        for row in basis.matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_basis(path) -> BehaviorBasis:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        match = _HEADER_RE.match(header.strip())
        if match is None:
            raise ValueError(
                f"{path}:1: expected header '# m=<m> p=<p> Tini=<Tini> Tf=<Tf> r=<r>', "
                f"got {header.strip()!r}"
            )
        m, p, Tini, Tf, r = (int(g) for g in match.groups())
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            entries = line.strip().split(",")
            if len(entries) != r:
                raise ValueError(f"{path}:{lineno}: expected {r} entries, got {len(entries)}")
            try:
                rows.append([float(v) for v in entries])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    q = (m + p) * (Tini + Tf)
    if len(rows) != q:
        raise ValueError(f"{path}: expected {q} data rows for the declared dims, got {len(rows)}")
    matrix = PartitionedMatrix(data=np.array(rows), m=m, p=p, Tini=Tini, Tf=Tf)
    return BehaviorBasis(matrix)
