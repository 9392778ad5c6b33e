"""Residuals of the Cauchy-Riemann analogue systems and their internal identities.

All systems are read with covariant derivatives ``U[i, j] = u^i_{;j}``. The
beta-only systems (19, 19a, 27, 32) take the field under test to be the null
field beta itself.

Residual ids follow the equation numbering: ``"13.1"``..``"13.16"``,
``"19a.c0"`` (contractions), ``"19a.x012"`` (cross relation with
derivative index 0, components 1 and 2), ``"27.n"``, ``"32.n"`` (``"32.0"``
is the trivial (0, 0) entry).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from .algebra import AlgebraPoint, algebra_point_from_beta
from .geometry import MetricField, VectorField4, christoffels_at, covariant_derivative_at

GUARD = 1e-10
PIVOT_TOL = 1e-12


class CrVariant(str, Enum):
    SYS13 = "Sys13"
    SYS13A = "Sys13a"
    SYS19 = "Sys19"
    SYS19A = "Sys19a"
    SYS27 = "Sys27"
    SYS32 = "Sys32"

    @property
    def needs_beta_field(self) -> bool:
        return self not in (CrVariant.SYS13, CrVariant.SYS13A)

    @classmethod
    def parse(cls, name: "str | CrVariant") -> "CrVariant":
        if isinstance(name, CrVariant):
            return name
        for v in cls:
            if v.value.lower() == str(name).lower():
                return v
        raise ValueError(f"unknown variant {name!r}; choose from {[v.value for v in cls]}")


class UnevaluablePoint(ValueError):
    """A division guard tripped; the point is reported rather than evaluated."""


class SingularSystemError(ValueError):
    def __init__(self, message: str, dependent_rows: tuple[int, ...]):
        super().__init__(message)
        self.dependent_rows = dependent_rows


@dataclass
class ResidualSample:
    point: np.ndarray
    variant: str
    residuals: dict[str, float]
    normalized: dict[str, float]
    constraints: dict[str, float] = field(default_factory=dict)

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def max_constraint(self) -> float:
        return max(self.constraints.values(), default=0.0)


# --------------------------------------------------------------------------
# Signed residual maps (linear in U)
# --------------------------------------------------------------------------

def sys13_signed(U: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """The 16 signed residuals of (13.1)..(13.16), in that order."""
    contr = U @ beta
    cross = [beta[0] * U[i, j] - beta[i] * U[0, j] for j in range(4) for i in (1, 2, 3)]
    return np.concatenate([contr, cross])


def sys13_ids(prefix: str = "13") -> list[str]:
    return [f"{prefix}.{n}" for n in range(1, 17)]


def sys13_jacobian(beta) -> np.ndarray:
    """Jacobian of :func:`sys13_signed` with respect to the 16 slots ``U.ravel()``."""
    beta = np.asarray(beta, dtype=float)
    J = np.empty((16, 16))
    for s in range(16):
        E = np.zeros(16)
        E[s] = 1.0
        J[:, s] = sys13_signed(E.reshape(4, 4), beta)
    return J


def numerical_rank(M, tol: float = 1e-9) -> int:
    """Number of singular values above ``tol * max(1, s_max)``."""
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))


def _sys13a(U, beta, prefix):
    res = {f"{prefix}.c{i}": abs(v) for i, v in enumerate(U @ beta)}
    for i in range(4):
        for j in range(4):
            for k in range(4):
                res[f"{prefix}.x{i}{j}{k}"] = abs(U[j, i] * beta[k] - U[k, i] * beta[j])
    return res


def _guards(beta, h):
    if abs(beta[0]) < GUARD:
        raise UnevaluablePoint(f"|beta^0| = {abs(beta[0]):.3g} below guard {GUARD:g}")
    if abs(h[0, 0]) < GUARD:
        raise UnevaluablePoint(f"|h_00| = {abs(h[0, 0]):.3g} below guard {GUARD:g}")


def residuals_from(variant: CrVariant, U: np.ndarray, beta: np.ndarray,
                   pt: AlgebraPoint | None = None) -> dict[str, float]:
    """Residual magnitudes of ``variant`` from numeric ``U`` and ``beta`` (and h for 27/32)."""
    variant = CrVariant.parse(variant)
    if variant in (CrVariant.SYS13, CrVariant.SYS19):
        prefix = "13" if variant is CrVariant.SYS13 else "19"
        return dict(zip(sys13_ids(prefix), np.abs(sys13_signed(U, beta)).tolist()))
    if variant in (CrVariant.SYS13A, CrVariant.SYS19A):
        return _sys13a(U, beta, "13a" if variant is CrVariant.SYS13A else "19a")
    if pt is None:
        raise ValueError(f"{variant.value} needs the algebra point (h)")
    h = pt.h
    _guards(beta, h)
    ratio = U[0, 0] / (beta[0] * h[0, 0])
    res = {}
    if variant is CrVariant.SYS27:
        # ratio is the estimate of S
        for j in range(4):
            for i in range(4):
                res[f"27.{1 + 4 * j + i}"] = abs(U[i, j] - beta[i] * h[j, 0] * ratio)
        return res
    for j in range(4):
        for i in range(4):
            n = i if j == 0 else 4 * j + i
            res[f"32.{n}"] = abs(U[i, j] - beta[i] * h[j, 0] * ratio)
    return res


# --------------------------------------------------------------------------
# Field-level operations
# --------------------------------------------------------------------------

def constraint_residuals_at(beta: VectorField4, g: MetricField, x,
                            pt: AlgebraPoint | None = None) -> tuple[float, float]:
    """(|g_ij beta^i beta^j|, |beta^j a_j^0 - 1|) at ``x``."""
    b = beta.at(x)
    if pt is None:
        pt = algebra_point_from_beta(g.at(x), b)
    return abs(float(b @ pt.g @ b)), abs(float(b @ pt.A[:, 0]) - 1.0)


def residuals_at(variant, g: MetricField, beta: VectorField4, x,
                 u: VectorField4 | None = None, a: float = 1.0,
                 c: float = 1.0) -> ResidualSample:
    """Evaluate one system and the two constraints at ``x``."""
    variant = CrVariant.parse(variant)
    if u is None:
        u = beta
    elif variant.needs_beta_field and u is not beta:
        raise ValueError(f"{variant.value} tests beta itself; do not pass a separate u")
    x = np.asarray(x, dtype=float)
    b = beta.at(x)
    pt = algebra_point_from_beta(g.at(x), b, a, c)
    gamma = christoffels_at(g, x)
    U = covariant_derivative_at(u, g, x, gamma)
    raw = residuals_from(variant, U, b, pt)
    scale = max(1.0, float(np.max(np.abs(U))))
    eq20, eq21 = constraint_residuals_at(beta, g, x, pt)
    return ResidualSample(point=x, variant=variant.value, residuals=raw,
                          normalized={k: v / scale for k, v in raw.items()},
                          constraints={"eq20": eq20, "eq21": eq21})


# --------------------------------------------------------------------------
# Derivative components v, w
# --------------------------------------------------------------------------

@dataclass
class DerivativeComponents:
    v: np.ndarray
    w: np.ndarray
    s: np.ndarray        # s_i = sum_j h_ij v^j
    sigma: np.ndarray    # sigma_i = sum_k h_ki w^k
    S: float             # v^0 - beta^0 v^1 / beta^1 (nan when beta^1 = 0)
    rows_v: tuple[int, ...]
    rows_w: tuple[int, ...]
    free: dict[str, float]
    residuals: dict[str, float]

    def max_residual(self) -> float:
        return max(self.residuals.values())


def _solve_three(M: np.ndarray, rhs: np.ndarray, scale: float) -> tuple[np.ndarray, tuple[int, ...]]:
    best, rows = 0.0, None
    for cand in combinations(range(4), 3):
        d = abs(np.linalg.det(M[list(cand)]))
        if d > best:
            best, rows = d, cand
    if rows is None or best <= PIVOT_TOL * scale ** 3:
        raise SingularSystemError(
            f"reduced 3x3 system is singular (best |det| = {best:.3g})",
            tuple(range(4)))
    return np.linalg.solve(M[list(rows)], rhs[list(rows)]), rows


def components_from(U: np.ndarray, pt: AlgebraPoint, v0: float = 0.0,
                    w0: float = 0.0) -> DerivativeComponents:
    """Solve three of the four independent relations for v^1..v^3 (and w^1..w^3).

    Left forms: u^0_{;j} = beta^0 sum_k h_jk v^k; right forms use h_kj.
    The three rows whose 3x3 block has the largest |det| are used.
    """
    beta, h = pt.beta, pt.h
    scale = max(1.0, float(np.max(np.abs(beta[0] * h))))

    def solve(H, x0):
        M = beta[0] * H[:, 1:]
        rhs = U[0, :] - beta[0] * H[:, 0] * x0
        sol, rows = _solve_three(M, rhs, scale)
        return np.concatenate([[x0], sol]), rows

    v, rows_v = solve(h, v0)
    w, rows_w = solve(h.T, w0)
    s = h @ v
    sigma = h.T @ w
    S = v[0] - beta[0] * v[1] / beta[1] if abs(beta[1]) >= GUARD else float("nan")
    res = {}
    for j in range(4):
        for i in range(4):
            res[f"14.{1 + 4 * j + i}"] = max(abs(U[i, j] - beta[i] * s[j]),
                                             abs(U[i, j] - beta[i] * sigma[j]))
    return DerivativeComponents(v=v, w=w, s=s, sigma=sigma, S=S, rows_v=rows_v,
                                rows_w=rows_w, free={"v0": v0, "w0": w0}, residuals=res)


def solve_derivative_components(u: VectorField4, beta: VectorField4, g: MetricField, x,
                                v0: float = 0.0, w0: float = 0.0, a: float = 1.0,
                                c: float = 1.0,
                                pt: AlgebraPoint | None = None) -> DerivativeComponents:
    x = np.asarray(x, dtype=float)
    if pt is None:
        pt = algebra_point_from_beta(g.at(x), beta.at(x), a, c)
    U = covariant_derivative_at(u, g, x)
    return components_from(U, pt, v0, w0)


def differentiable_relations_check(beta: VectorField4, g: MetricField, x,
                                   v0: float = 0.0, a: float = 1.0,
                                   c: float = 1.0) -> ResidualSample:
    """Relations that hold when left and right derivatives coincide (w = v)."""
    x = np.asarray(x, dtype=float)
    b = beta.at(x)
    pt = algebra_point_from_beta(g.at(x), b, a, c)
    h = pt.h
    _guards(b, h)
    if abs(b[1]) < GUARD:
        raise UnevaluablePoint(f"|beta^1| = {abs(b[1]):.3g} below guard {GUARD:g}")
    U = covariant_derivative_at(beta, g, x)
    comp = components_from(U, pt, v0, v0)
    v = comp.v
    res = {
        "eq24": abs(v[2] - b[2] / b[1] * v[1]),
        "eq25": abs(v[3] - b[3] / b[1] * v[1]),
        "eq26": abs(comp.S - U[0, 0] / (b[0] * h[0, 0])),
    }
    for i in (1, 2, 3):
        pred = b[i] / b[0] * v[0] - b[i] / (b[0] ** 2 * h[0, 0]) * U[0, 0]
        res[f"eq33.{i}"] = abs(v[i] - pred)
    # right-hand forms evaluated with w forced equal to v
    res["14.right(w=v)"] = float(np.max(np.abs(U - np.outer(b, h.T @ v))))
    scale = max(1.0, float(np.max(np.abs(U))))
    eq20, eq21 = constraint_residuals_at(beta, g, x, pt)
    return ResidualSample(point=x, variant="differentiable", residuals=res,
                          normalized={k: val / scale for k, val in res.items()},
                          constraints={"eq20": eq20, "eq21": eq21})


def implication_residual(U: np.ndarray, beta: np.ndarray) -> float:
    """max_i |r_i - (beta^i/beta^0) r_0 - sum_j (beta^j/beta^0) r_ij| for i = 1..3.

    ``r_i`` are the signed contractions (13.1..4) and ``r_ij`` the signed cross
    relations; the combination vanishes for every U.
    """
    if abs(beta[0]) < GUARD:
        raise UnevaluablePoint(f"|beta^0| = {abs(beta[0]):.3g} below guard {GUARD:g}")
    contr = U @ beta
    out = 0.0
    for i in (1, 2, 3):
        cross = beta[0] * U[i, :] - beta[i] * U[0, :]
        comb = contr[i] - beta[i] / beta[0] * contr[0] - cross @ beta / beta[0]
        out = max(out, abs(float(comb)))
    return out


def dependency_identities_check(beta: VectorField4, g: MetricField, x,
                                a: float = 1.0, c: float = 1.0) -> ResidualSample:
    x = np.asarray(x, dtype=float)
    b = beta.at(x)
    pt = algebra_point_from_beta(g.at(x), b, a, c)
    h = pt.h
    _guards(b, h)
    U = covariant_derivative_at(beta, g, x)
    S = U[0, 0] / (b[0] * h[0, 0])
    res = {
        # beta-weighted column sums of the (27) right-hand sides
        "eq28": float(np.max(np.abs(b * S * (h[:, 0] @ b)))),
        # U[k, i] h_j0 - U[k, j] h_i0 for all i, j, k
        "eq29": float(np.max(np.abs(U[:, :, None] * h[None, None, :, 0]
                                    - U[:, None, :] * h[None, :, 0, None]))),
        "eq30": float(np.max(np.abs(h @ U))),
        "eq31": float(np.max(np.abs(h.T @ U))),
        "implication": implication_residual(U, b),
    }
    scale = max(1.0, float(np.max(np.abs(U))))
    eq20, eq21 = constraint_residuals_at(beta, g, x, pt)
    return ResidualSample(point=x, variant="dependency", residuals=res,
                          normalized={k: val / scale for k, val in res.items()},
                          constraints={"eq20": eq20, "eq21": eq21})


def sys32_to_sys19_bound(beta: np.ndarray, h: np.ndarray, eps: float) -> float:
    """Upper bound on Sys19 residuals implied by Sys32 residuals <= eps."""
    return 4.0 * float(np.max(np.abs(beta))) * float(np.max(np.abs(h))) * eps / abs(beta[0] * h[0, 0])
