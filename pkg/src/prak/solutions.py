"""Catalog of closed-form solutions, plus the spherical-case obstruction function.

Coordinates are (t, r, phi, z) -> (x0, x1, x2, x3). Free functions are
expression strings: ``W`` in the single variable ``s``, ``rho`` and ``f`` in
``r``, ``tau`` and ``phi`` in ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .crsys import CrVariant
from .exprfield import (Expr, call, differentiate_expr, div, eval_expr, mul, neg, num,
                        parse_expression, power, sub, substitute, to_string)
from .geometry import MetricField, VectorField4

DIRECTION_TOL = 1e-12
OBSTRUCTION_DENOM_TOL = 1e-12
OBSTRUCTION_MIN_VARIATION = 0.01

DEFAULT_GRID = {
    "x0": (0.1, 0.9, 5),
    "x1": (0.1, 0.9, 5),
    "x2": (0.5, 0.5, 1),
    "x3": (0.5, 0.5, 1),
}


class SolutionParamError(ValueError):
    pass


@dataclass
class SolutionSpec:
    name: str
    metric: MetricField
    field: VectorField4
    parameters: dict[str, Any]
    expected_curvature: str          # "zero" or "nonzero"
    target_system: CrVariant
    grid: dict[str, tuple[float, float, int]] = field(default_factory=lambda: dict(DEFAULT_GRID))
    precondition: Callable[[np.ndarray], None] | None = None

    def check_point(self, x) -> None:
        """Raise SolutionParamError if the parameter preconditions fail at ``x``."""
        if self.precondition is not None:
            self.precondition(np.asarray(x, dtype=float))


def grid_points(grid: dict[str, tuple[float, float, int]]) -> list[np.ndarray]:
    """Cartesian product of per-axis linspaces, x0 varying slowest."""
    axes = []
    for k in ("x0", "x1", "x2", "x3"):
        lo, hi, n = grid[k]
        if int(n) < 1:
            raise ValueError(f"grid count for {k} must be >= 1")
        axes.append(np.linspace(lo, hi, int(n)) if int(n) > 1 else np.array([float(lo)]))
    mesh = np.meshgrid(*axes, indexing="ij")
    return [np.array(p) for p in np.stack([m.ravel() for m in mesh], axis=1)]


def minkowski_lightcone(b1: float = 1.0, b2: float = 0.0, b3: float = 0.0) -> SolutionSpec:
    norm2 = b1 * b1 + b2 * b2 + b3 * b3
    if abs(norm2 - 1.0) > DIRECTION_TOL:
        raise SolutionParamError(f"cone direction must be a unit vector (|b|^2 = {norm2!r})")
    return SolutionSpec(
        name="minkowski-cone",
        metric=MetricField.diagonal([1.0, -1.0, -1.0, -1.0]),
        field=VectorField4.constant([1.0, b1, b2, b3]),
        parameters={"b1": b1, "b2": b2, "b3": b3},
        expected_curvature="zero",
        target_system=CrVariant.SYS32,
    )


def _profile(src: Expr | str) -> Expr:
    """W as an expression in x0 (the placeholder ``s``)."""
    if isinstance(src, str):
        return parse_expression(src, {"s": 0})
    return src


def _coord_expr(src: Expr | str) -> Expr:
    return parse_expression(src, "cylindrical") if isinstance(src, str) else src


def _positivity_guard(checks: list[tuple[str, Expr]]) -> Callable[[np.ndarray], None]:
    def guard(x: np.ndarray) -> None:
        for label, e in checks:
            v = eval_expr(e, x)
            if not v > 0:
                raise SolutionParamError(f"precondition {label} > 0 fails at {x.tolist()} ({v:.6g})")
    return guard


def cylindrical_sys32(W: Expr | str = "2 + s^2", rho: Expr | str = "r",
                      tau: Expr | str = "t", p: float = 1.0) -> SolutionSpec:
    """beta = (1/(W tau'), 1/(W rho'), 0, 0), g = diag(W^2 tau'^2, -W^2 rho'^2, -W^2, -W^2 p^2).

    W is evaluated at rho(r) - tau(t).
    """
    if p == 0:
        raise SolutionParamError("p must be nonzero")
    rho_e = _coord_expr(rho)
    tau_e = _coord_expr(tau)
    Ws = substitute(_profile(W), {0: sub(rho_e, tau_e)})
    rho_r = differentiate_expr(rho_e, 1)
    tau_t = differentiate_expr(tau_e, 0)
    W2 = power(Ws, 2)
    metric = MetricField.diagonal([
        mul(W2, power(tau_t, 2)),
        neg(mul(W2, power(rho_r, 2))),
        neg(W2),
        neg(mul(W2, num(p * p))),
    ])
    beta = VectorField4([div(num(1), mul(Ws, tau_t)), div(num(1), mul(Ws, rho_r)), 0.0, 0.0])
    return SolutionSpec(
        name="cyl-sys32",
        metric=metric, field=beta,
        parameters={"W": to_string(_profile(W)), "rho": to_string(rho_e),
                    "tau": to_string(tau_e), "p": p},
        expected_curvature="nonzero",
        target_system=CrVariant.SYS32,
        precondition=_positivity_guard([("W", Ws), ("rho'", rho_r), ("tau'", tau_t)]),
    )


def cylindrical_sys19a(W: Expr | str = "2 + s^2", f: Expr | str = "r",
                       phi: Expr | str = "t", c: float = 1.0) -> SolutionSpec:
    """The (19a) family transcribed as displayed, with Q = sqrt(W^2 - 1) at f(r) - phi(t).

    beta = (Q/phi', Q/f', Q/sqrt(1+c^2), c Q/sqrt(1+c^2)),
    g = diag(phi'^2/(W^2-1), -W^2 f'^2/(W^2-1), -1, -1).
    """
    f_e = _coord_expr(f)
    phi_e = _coord_expr(phi)
    Ws = substitute(_profile(W), {0: sub(f_e, phi_e)})
    f_r = differentiate_expr(f_e, 1)
    phi_t = differentiate_expr(phi_e, 0)
    W2 = power(Ws, 2)
    W2m1 = sub(W2, num(1))
    Q = call("sqrt", W2m1)
    k = 1.0 / math.sqrt(1.0 + c * c)
    metric = MetricField.diagonal([
        div(power(phi_t, 2), W2m1),
        neg(div(mul(W2, power(f_r, 2)), W2m1)),
        -1.0, -1.0,
    ])
    beta = VectorField4([div(Q, phi_t), div(Q, f_r), mul(num(k), Q), mul(num(c * k), Q)])
    return SolutionSpec(
        name="cyl-sys19a",
        metric=metric, field=beta,
        parameters={"W": to_string(_profile(W)), "f": to_string(f_e),
                    "phi": to_string(phi_e), "c": c},
        expected_curvature="zero",
        target_system=CrVariant.SYS19A,
        precondition=_positivity_guard([("W^2 - 1", W2m1), ("f'", f_r), ("phi'", phi_t)]),
    )


def spherical_obstruction_value(H: float, theta: float) -> float:
    """F(theta; H), the ratio whose constancy in theta the spherical case would need."""
    if not H > 0:
        raise SolutionParamError("H must be positive")
    q = theta / H
    numer = -math.cos(q) * math.sin(theta) + H * math.cos(theta) * math.sin(q)
    denom = math.sin(q) * math.sin(theta) + H * math.cos(theta) * math.cos(q)
    if abs(denom) < OBSTRUCTION_DENOM_TOL:
        raise ZeroDivisionError(f"obstruction denominator vanishes at theta={theta!r}, H={H!r}")
    return numer / denom


@dataclass(frozen=True)
class ObstructionFunction:
    H: float

    def __post_init__(self):
        if not self.H > 0:
            raise SolutionParamError("H must be positive")

    def __call__(self, theta: float) -> float:
        return spherical_obstruction_value(self.H, theta)

    def variation(self, lo: float = math.pi / 6, hi: float = math.pi / 2,
                  samples: int = 201) -> float:
        """max - min of F over a uniform sample of [lo, hi]; skips poles of F."""
        vals = []
        for th in np.linspace(lo, hi, samples):
            try:
                vals.append(self(float(th)))
            except ZeroDivisionError:
                continue
        if not vals:
            raise ValueError("no evaluable samples")
        return max(vals) - min(vals)


CATALOG: dict[str, Callable[..., SolutionSpec]] = {
    "minkowski-cone": minkowski_lightcone,
    "cyl-sys32": cylindrical_sys32,
    "cyl-sys19a": cylindrical_sys19a,
}
OBSTRUCTION_ENTRY = "spherical-obstruction"


def catalog_names() -> list[str]:
    return sorted([*CATALOG, OBSTRUCTION_ENTRY])


def get_solution(name: str, **params) -> SolutionSpec:
    if name not in CATALOG:
        if name == OBSTRUCTION_ENTRY:
            raise ValueError(f"{name!r} is a scalar obstruction function, not a metric/field pair")
        raise KeyError(f"unknown catalog entry {name!r}; available: {', '.join(catalog_names())}")
    try:
        return CATALOG[name](**params)
    except TypeError as exc:
        raise SolutionParamError(f"bad parameters for {name!r}: {exc}") from None
