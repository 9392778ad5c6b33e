"""4x4 kernel: signature checks and the triangular factorization A eta A^T = g.

Matrices are plain ``(4, 4)`` float arrays. Index convention throughout the
package: ``A[i, j]`` is a_i^j, the coefficient of k_j in e_i, so ``A`` is
lower triangular and ``g = A @ ETA @ A.T``.
"""

from __future__ import annotations

import numpy as np

ETA = np.diag([1.0, -1.0, -1.0, -1.0])
ETA.setflags(write=False)

# required sign of the k-th leading principal minor, k = 1..4
MINOR_SIGNS = (1, -1, 1, -1)

SYMMETRY_RTOL = 1e-12
DEGENERACY_TOL = 1e-10


class MetricError(ValueError):
    pass


class AsymmetricMetricError(MetricError):
    pass


class SignatureError(MetricError):
    """A leading minor has the wrong sign (or is too close to zero)."""

    def __init__(self, order: int, value: float, message: str | None = None):
        self.order = order
        self.value = value
        relation = "> 0" if MINOR_SIGNS[order - 1] > 0 else "< 0"
        if message is None:
            message = (f"{order}x{order} leading minor = {value:.6g} "
                       f"violates '{relation}'")
        super().__init__(message)


class FactorizationError(MetricError):
    pass


def as_mat4(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def leading_minors(g) -> np.ndarray:
    g = as_mat4(g)
    return np.array([np.linalg.det(g[:k, :k]) if k > 1 else g[0, 0]
                     for k in range(1, 5)])


def check_signature(g, rtol: float = SYMMETRY_RTOL,
                    degeneracy: float = DEGENERACY_TOL) -> np.ndarray:
    """Validate signature (1,-1,-1,-1) and return the symmetrized metric.

    Minors within ``degeneracy * scale**k`` of zero are rejected, where
    ``scale = max(1, max|g|)``.
    """
    g = as_mat4(g)
    scale = max(1.0, float(np.max(np.abs(g))))
    asym = float(np.max(np.abs(g - g.T)))
    if asym > rtol * scale:
        raise AsymmetricMetricError(f"metric not symmetric (max |g - g^T| = {asym:.3g})")
    g = 0.5 * (g + g.T)
    for k, (minor, sign) in enumerate(zip(leading_minors(g), MINOR_SIGNS), start=1):
        if minor * sign <= 0:
            raise SignatureError(k, float(minor))
        if abs(minor) <= degeneracy * scale ** k:
            raise SignatureError(k, float(minor),
                                 f"{k}x{k} leading minor = {minor:.6g} is degenerate")
    return g


def triangular_factor(g) -> np.ndarray:
    """Lower-triangular ``A`` with positive diagonal and ``A @ ETA @ A.T == g``.

    Solved column by column: first (a_0^0, a_1^0, a_2^0, a_3^0), then
    (a_1^1, a_2^1, a_3^1), (a_2^2, a_3^2) and a_3^3.
    """
    g = as_mat4(g)
    eta = np.diag(ETA)
    A = np.zeros((4, 4))
    for j in range(4):
        d = eta[j] * (g[j, j] - np.dot(eta[:j] * A[j, :j], A[j, :j]))
        if not d > 0.0:
            raise FactorizationError(
                f"non-positive pivot {d:.6g} in column {j}; metric is degenerate "
                "or has the wrong signature")
        A[j, j] = np.sqrt(d)
        for i in range(j + 1, 4):
            A[i, j] = eta[j] * (g[i, j] - np.dot(eta[:j] * A[i, :j], A[j, :j])) / A[j, j]
    return A


def invert_lower_triangular(A) -> np.ndarray:
    """Inverse of a lower-triangular matrix by forward substitution."""
    A = as_mat4(A)
    if np.any(np.triu(A, 1) != 0.0):
        raise ValueError("matrix is not lower triangular")
    diag = np.diag(A)
    if np.any(diag == 0.0):
        raise ZeroDivisionError("zero diagonal entry in triangular matrix")
    B = np.zeros((4, 4))
    for j in range(4):
        B[j, j] = 1.0 / A[j, j]
        for i in range(j + 1, 4):
            B[i, j] = -np.dot(A[i, j:i], B[j:i, j]) / A[i, i]
    return B


def rank_and_det(M, tol: float = 1e-10) -> tuple[int, float]:
    """Rank and determinant from Gaussian elimination with complete pivoting.

    Pivots with magnitude ``<= tol`` count as zero for the rank; the
    determinant is the signed product of all pivots actually produced.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    U = as_mat4(M).copy()
    n = 4
    sign = 1.0
    det = 1.0
    rank = 0
    for k in range(n):
        sub = np.abs(U[k:, k:])
        p, q = np.unravel_index(np.argmax(sub), sub.shape)
        p += k
        q += k
        if p != k:
            U[[k, p]] = U[[p, k]]
            sign = -sign
        if q != k:
            U[:, [k, q]] = U[:, [q, k]]
            sign = -sign
        pivot = U[k, k]
        det *= pivot
        if abs(pivot) <= tol:
            # remaining block is numerically zero
            break
        rank += 1
        U[k + 1:, k:] -= np.outer(U[k + 1:, k] / pivot, U[k, k:])
    return rank, float(sign * det)


def inverse_metric(A) -> np.ndarray:
    """g^{-1} from the factor: ``B.T @ ETA @ B`` with ``B = A^{-1}``."""
    B = invert_lower_triangular(A)
    return B.T @ ETA @ B
