"""The local algebra at a point: every product is a multiple of one null vector R.

In the orthonormal k-basis the multiplication table is ``kappa`` and
``R = alpha = (1, alpha^1, alpha^2, alpha^3)``; in the coordinate e-basis it
is ``h = A kappa A^T`` with ``R = beta = B^T alpha``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .linalg4 import ETA, check_signature, invert_lower_triangular, rank_and_det, triangular_factor
from .report import ResidualReport

ALPHA_NORM_TOL = 1e-12
IDENTITY_TOL = 1e-10


class AlgebraParamError(ValueError):
    pass


@dataclass(frozen=True)
class AlgebraParams:
    """Constants of the multiplication table: ``a``, ``c`` and the unit 3-vector ``alpha``."""

    a: float = 1.0
    c: float = 1.0
    alpha: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        alpha = tuple(float(v) for v in self.alpha)
        if len(alpha) != 3:
            raise AlgebraParamError("alpha needs three components")
        object.__setattr__(self, "alpha", alpha)
        if self.a == 0:
            raise AlgebraParamError("a must be nonzero")
        norm2 = sum(v * v for v in alpha)
        if abs(norm2 - 1.0) > ALPHA_NORM_TOL:
            raise AlgebraParamError(f"alpha must be a unit vector (|alpha|^2 = {norm2!r})")

    @property
    def alpha_full(self) -> np.ndarray:
        return np.array((1.0,) + self.alpha)

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 3.0) -> "AlgebraParams":
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        a = rng.uniform(0.2, scale) * rng.choice([-1.0, 1.0])
        return cls(a=float(a), c=float(rng.uniform(-scale, scale)), alpha=tuple(v))


def _kappa(a: float, c: float, al: np.ndarray) -> np.ndarray:
    a1, a2, a3 = al
    return np.array([
        [a, -a1 * a, -a2 * a, -a3 * a],
        [-a1 * a, a, a3 * c, -a2 * c],
        [-a2 * a, -a3 * c, a, a1 * c],
        [-a3 * a, a2 * c, -a1 * c, a],
    ])


def kappa_matrix(p: AlgebraParams) -> np.ndarray:
    """Multiplication table of the k-basis: ``k_m k_n = kappa[m, n] R``."""
    return _kappa(p.a, p.c, np.asarray(p.alpha))


@dataclass(frozen=True)
class AlgebraPoint:
    g: np.ndarray
    A: np.ndarray
    B: np.ndarray
    kappa: np.ndarray
    h: np.ndarray
    beta: np.ndarray
    alpha_full: np.ndarray
    a: float
    c: float

    @property
    def R(self) -> np.ndarray:
        """Components of R in the e-basis (identical to ``beta``)."""
        return self.beta


def beta_from_alpha(alpha_full, B) -> np.ndarray:
    """beta^i = sum_j alpha^j b_j^i."""
    return np.asarray(B).T @ np.asarray(alpha_full, dtype=float)


def alpha_from_beta(beta, A) -> np.ndarray:
    """alpha^i = sum_j beta^j a_j^i; the inverse of :func:`beta_from_alpha`."""
    return np.asarray(A).T @ np.asarray(beta, dtype=float)


def build_algebra_point(g, p: AlgebraParams) -> AlgebraPoint:
    g = check_signature(g)
    A = triangular_factor(g)
    B = invert_lower_triangular(A)
    kappa = kappa_matrix(p)
    alpha = p.alpha_full
    return AlgebraPoint(g=g, A=A, B=B, kappa=kappa, h=A @ kappa @ A.T,
                        beta=beta_from_alpha(alpha, B), alpha_full=alpha,
                        a=p.a, c=p.c)


def algebra_point_from_beta(g, beta, a: float = 1.0, c: float = 1.0) -> AlgebraPoint:
    """Algebra at a point where the null vector beta is given instead of alpha.

    alpha is recovered from beta and the table rebuilt from it; no
    normalization is imposed, so a beta that violates the constraints gives a
    table that violates them too.
    """
    g = check_signature(g)
    A = triangular_factor(g)
    B = invert_lower_triangular(A)
    beta = np.asarray(beta, dtype=float)
    alpha = alpha_from_beta(beta, A)
    kappa = _kappa(a, c, alpha[1:])
    return AlgebraPoint(g=g, A=A, B=B, kappa=kappa, h=A @ kappa @ A.T,
                        beta=beta, alpha_full=alpha, a=a, c=c)


def with_corrupted_h(pt: AlgebraPoint, delta: float, index=(0, 1)) -> AlgebraPoint:
    """Copy of ``pt`` with one entry of ``h`` perturbed (detector tests)."""
    h = pt.h.copy()
    h[index] += delta
    return dataclasses.replace(pt, h=h)


def _product(y, z, table, rvec) -> np.ndarray:
    return float(np.asarray(y) @ table @ np.asarray(z)) * rvec


def multiply_elements(y, z, pt: AlgebraPoint) -> np.ndarray:
    """Product of two elements given by e-basis components."""
    return _product(y, z, pt.h, pt.beta)


def multiply_k(y, z, pt: AlgebraPoint) -> np.ndarray:
    """Product of two elements given by k-basis components."""
    return _product(y, z, pt.kappa, pt.alpha_full)


def conjugate(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.array([y[0], -y[1], -y[2], -y[3]])


def parallel_residual(v, d) -> float:
    """Normalized distance of ``v`` from the line spanned by ``d`` (0 for v = 0)."""
    v = np.asarray(v, dtype=float)
    d = np.asarray(d, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    u = d / np.linalg.norm(d)
    return float(np.linalg.norm(v - (v @ u) * u) / nv)


def algebra_identity_report(pt: AlgebraPoint, g=None, trials: int = 16,
                            rng: np.random.Generator | None = None,
                            tol: float = IDENTITY_TOL) -> ResidualReport:
    """Largest residual of each algebra identity over ``trials`` random elements."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    g = pt.g if g is None else np.asarray(g, dtype=float)
    rng = np.random.default_rng(0) if rng is None else rng
    beta, h = pt.beta, pt.h

    conj_prod = annihil = triple = 0.0
    for _ in range(trials):
        y, z, w = rng.uniform(-1.0, 1.0, size=(3, 4))
        lhs = multiply_k(y, conjugate(y), pt)
        rhs = pt.a * (y @ ETA @ y) * pt.alpha_full
        conj_prod = max(conj_prod, float(np.max(np.abs(lhs - rhs))))
        annihil = max(annihil,
                      float(np.max(np.abs(multiply_elements(z, beta, pt)))),
                      float(np.max(np.abs(multiply_elements(beta, z, pt)))))
        yz = multiply_elements(y, z, pt)
        zw = multiply_elements(z, w, pt)
        triple = max(triple,
                     float(np.max(np.abs(multiply_elements(yz, w, pt)))),
                     float(np.max(np.abs(multiply_elements(y, zw, pt)))))

    rep = ResidualReport()
    rep.add("eq4_conjugate_product", conj_prod, tol)
    rep.add("zR_annihilation", annihil, tol)
    rep.add("triple_product", triple, tol)
    rep.add("eq22_right", float(np.max(np.abs(h @ beta))), tol)
    rep.add("eq22_left", float(np.max(np.abs(h.T @ beta))), tol)
    rep.add("eq23", float(np.max(np.abs(h[0, :] - h[:, 0]))), tol)
    rep.add("eq20", abs(float(beta @ g @ beta)), tol)
    rep.add("eq21", abs(float(beta @ pt.A[:, 0]) - 1.0), tol)
    rank, det = rank_and_det(pt.kappa, 1e-10)
    rep.add("kappa_rank_defect", abs(rank - 3), 0.0)
    rep.add("kappa_det", abs(det), tol)
    rep.extra["kappa_rank"] = rank
    return rep
