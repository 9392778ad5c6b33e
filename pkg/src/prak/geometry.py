"""Connection, curvature and null curves for metrics given as expression fields.

First derivatives of the metric come from symbolic differentiation; the
Riemann tensor differentiates the Christoffel symbols numerically (central
differences with one Richardson step).

Index layout: ``gamma[i, k, j]`` is Gamma^i_{kj}, ``riem[i, j, k, l]`` is
R^i_{jkl}, and ``D[i, j]`` is the covariant derivative u^i_{;j}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exprfield import (ALIAS_SETS, Expr, ExprDomainError, as_expr, differentiate_expr,
                        eval_expr, num, to_string)

FD_STEP = 1e-4
CURVATURE_ZERO = 1e-6
CURVATURE_NONZERO = 1e-4
_COND_LIMIT = 1e14

_UPPER = [(i, j) for i in range(4) for j in range(i, 4)]


class SingularMetricError(ValueError):
    pass


class StencilDomainError(ValueError):
    pass


class CurveDomainError(ValueError):
    pass


def _point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise ValueError(f"a point needs four coordinates, got shape {x.shape}")
    return x


class MetricField:
    """Symmetric 4x4 array of expressions g_ij(x0..x3).

    Only the upper triangle is stored, so symmetry holds by construction.
    """

    def __init__(self, upper: Mapping[tuple[int, int], Expr | str | float],
                 aliases: Mapping[str, int] | str = "cylindrical",
                 domain: Sequence[tuple[float, float]] | None = None):
        self._expr = {}
        for (i, j) in _UPPER:
            key = (i, j) if (i, j) in upper else (j, i)
            self._expr[(i, j)] = as_expr(upper.get(key, 0.0), aliases)
        self._dexpr = {(k, i, j): differentiate_expr(e, k)
                       for (i, j), e in self._expr.items() for k in range(4)}
        self.domain = None if domain is None else [tuple(map(float, d)) for d in domain]

    @classmethod
    def from_upper(cls, exprs: Sequence, aliases="cylindrical", domain=None) -> "MetricField":
        """From 10 entries in the order g00 g01 g02 g03 g11 g12 g13 g22 g23 g33."""
        if len(exprs) != 10:
            raise ValueError("expected 10 upper-triangle entries")
        return cls(dict(zip(_UPPER, exprs)), aliases, domain)

    @classmethod
    def diagonal(cls, exprs: Sequence, aliases="cylindrical", domain=None) -> "MetricField":
        if len(exprs) != 4:
            raise ValueError("expected 4 diagonal entries")
        return cls({(i, i): e for i, e in enumerate(exprs)}, aliases, domain)

    @classmethod
    def constant(cls, matrix) -> "MetricField":
        m = np.asarray(matrix, dtype=float)
        return cls({(i, j): num(m[i, j]) for (i, j) in _UPPER})

    def component(self, i: int, j: int) -> Expr:
        return self._expr[(min(i, j), max(i, j))]

    def upper_strings(self) -> list[str]:
        return [to_string(self._expr[ij]) for ij in _UPPER]

    def at(self, x) -> np.ndarray:
        x = _point(x)
        G = np.empty((4, 4))
        for (i, j), e in self._expr.items():
            G[i, j] = G[j, i] = eval_expr(e, x)
        return G

    def derivatives_at(self, x) -> np.ndarray:
        """``dg[k, i, j]`` = d g_ij / d x^k."""
        x = _point(x)
        dg = np.empty((4, 4, 4))
        for (k, i, j), e in self._dexpr.items():
            dg[k, i, j] = dg[k, j, i] = eval_expr(e, x)
        return dg


class VectorField4:
    """Four expression components u^i(x0..x3)."""

    def __init__(self, components: Sequence[Expr | str | float],
                 aliases: Mapping[str, int] | str = "cylindrical"):
        if len(components) != 4:
            raise ValueError("a vector field needs four components")
        self.components = tuple(as_expr(c, aliases) for c in components)
        self._d = [[differentiate_expr(c, j) for j in range(4)] for c in self.components]

    @classmethod
    def constant(cls, values) -> "VectorField4":
        return cls([num(v) for v in values])

    def strings(self) -> list[str]:
        return [to_string(c) for c in self.components]

    def at(self, x) -> np.ndarray:
        x = _point(x)
        return np.array([eval_expr(c, x) for c in self.components])

    def jacobian_at(self, x) -> np.ndarray:
        """``J[i, j]`` = d u^i / d x^j."""
        x = _point(x)
        return np.array([[eval_expr(d, x) for d in row] for row in self._d])


def _invert(G: np.ndarray) -> np.ndarray:
    try:
        cond = np.linalg.cond(G)
        if not np.isfinite(cond) or cond > _COND_LIMIT:
            raise SingularMetricError(f"metric is singular (condition number {cond:.3g})")
        return np.linalg.inv(G)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(str(exc)) from None


def christoffels_at(g: MetricField, x) -> np.ndarray:
    """Gamma^i_{kj} = 1/2 g^{im} (d_k g_mj + d_j g_mk - d_m g_kj)."""
    ginv = _invert(g.at(x))
    dg = g.derivatives_at(x)
    # lower[m, k, j] = d_k g_mj + d_j g_mk - d_m g_kj
    lower = (np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg)
    return 0.5 * np.einsum("im,mkj->ikj", ginv, lower)


def metric_compatibility_residual(g: MetricField, x) -> float:
    """max |d_k g_ij - Gamma^m_ik g_mj - Gamma^m_jk g_im| (zero for Levi-Civita)."""
    G = g.at(x)
    dg = g.derivatives_at(x)
    gam = christoffels_at(g, x)
    t1 = np.einsum("mik,mj->kij", gam, G)
    t2 = np.einsum("mjk,im->kij", gam, G)
    return float(np.max(np.abs(dg - t1 - t2)))


def covariant_derivative_at(u: VectorField4, g: MetricField, x,
                            gamma: np.ndarray | None = None) -> np.ndarray:
    """u^i_{;j} = d_j u^i + Gamma^i_{kj} u^k."""
    gamma = christoffels_at(g, x) if gamma is None else gamma
    return u.jacobian_at(x) + np.einsum("ikj,k->ij", gamma, u.at(x))


def null_geodesic_residual(beta: VectorField4, g: MetricField, x) -> np.ndarray:
    """sum_l beta^i_{;l} beta^l, the geodesic equation for tangent field beta."""
    return covariant_derivative_at(beta, g, x) @ beta.at(x)


@dataclass(frozen=True)
class RiemannAt:
    riem: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.riem)))

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.riem + np.swapaxes(self.riem, 2, 3))))

    def bianchi_residual(self) -> float:
        R = self.riem
        cyc = R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))
        return float(np.max(np.abs(cyc)))

    def lowered(self, G) -> np.ndarray:
        return np.einsum("im,mjkl->ijkl", np.asarray(G), self.riem)

    def pair_symmetry_residual(self, G) -> float:
        low = self.lowered(G)
        return float(np.max(np.abs(low - np.transpose(low, (2, 3, 0, 1)))))


def _christoffel_derivatives(g: MetricField, x: np.ndarray, h: float,
                             richardson: bool) -> np.ndarray:
    """``dgam[l, i, k, j]`` = d_l Gamma^i_{kj} by central differences."""
    def central(step):
        out = np.empty((4, 4, 4, 4))
        for l in range(4):
            e = np.zeros(4)
            e[l] = step
            out[l] = (christoffels_at(g, x + e) - christoffels_at(g, x - e)) / (2 * step)
        return out

    try:
        coarse = central(h)
        if not richardson:
            return coarse
        fine = central(h / 2)
    except ExprDomainError as exc:
        raise StencilDomainError(f"finite-difference stencil left the metric domain: {exc}") from None
    except SingularMetricError as exc:
        raise StencilDomainError(f"singular metric inside the stencil: {exc}") from None
    return (4.0 * fine - coarse) / 3.0


def riemann_at(g: MetricField, x, h: float = FD_STEP, richardson: bool = True) -> RiemannAt:
    """R^i_{jkl} = d_k Gamma^i_{jl} - d_l Gamma^i_{jk} + Gamma^i_{mk} Gamma^m_{jl} - Gamma^i_{ml} Gamma^m_{jk}."""
    x = _point(x)
    gam = christoffels_at(g, x)
    dgam = _christoffel_derivatives(g, x, h, richardson)
    # d_k Gamma^i_{jl} arranged as [i, j, k, l]
    dk = np.transpose(dgam, (1, 2, 0, 3))
    quad = np.einsum("imk,mjl->ijkl", gam, gam)
    R = dk - np.swapaxes(dk, 2, 3) + quad - np.swapaxes(quad, 2, 3)
    return RiemannAt(R)


def classify_curvature(max_abs: float, zero_tol: float = CURVATURE_ZERO,
                       nonzero_tol: float = CURVATURE_NONZERO) -> str:
    if max_abs <= zero_tol:
        return "zero"
    if max_abs >= nonzero_tol:
        return "nonzero"
    return "indeterminate"


@dataclass(frozen=True)
class CurveTrace:
    tau: np.ndarray        # (n,)
    points: np.ndarray     # (n, 4)
    transport: np.ndarray  # (n, 4) values of D beta^i / d tau
    isotropy: np.ndarray   # (n,) values of g_ij beta^i beta^j

    @property
    def max_transport(self) -> float:
        return float(np.max(np.abs(self.transport)))

    @property
    def max_isotropy(self) -> float:
        return float(np.max(np.abs(self.isotropy)))


def trace_isotropic_curve(beta: VectorField4, g: MetricField, x0, dtau: float,
                          steps: int) -> CurveTrace:
    """Integrate dx/dtau = beta(x) with classical RK4, recording transport residuals.

    A negative ``dtau`` integrates backwards.
    """
    if dtau == 0 or not np.isfinite(dtau):
        raise ValueError("dtau must be a finite nonzero step")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = _point(x0).copy()
    pts, trans, iso = [], [], []

    def record(p):
        b = beta.at(p)
        trans.append(covariant_derivative_at(beta, g, p) @ b)
        iso.append(float(b @ g.at(p) @ b))
        pts.append(p.copy())

    try:
        record(x)
        for _ in range(steps):
            k1 = beta.at(x)
            k2 = beta.at(x + 0.5 * dtau * k1)
            k3 = beta.at(x + 0.5 * dtau * k2)
            k4 = beta.at(x + dtau * k3)
            x = x + dtau / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            record(x)
    except (ExprDomainError, SingularMetricError) as exc:
        raise CurveDomainError(f"curve left the valid domain near {x.tolist()}: {exc}") from None
    return CurveTrace(tau=dtau * np.arange(steps + 1), points=np.array(pts),
                      transport=np.array(trans), isotropy=np.array(iso))
