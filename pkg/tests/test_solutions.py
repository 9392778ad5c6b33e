import math

import numpy as np
import pytest

from prak.crsys import CrVariant, residuals_at
from prak.geometry import riemann_at
from prak.solutions import (ObstructionFunction, SolutionParamError, catalog_names,
                            cylindrical_sys19a, cylindrical_sys32, get_solution, grid_points,
                            minkowski_lightcone, spherical_obstruction_value)

X = np.array([0.3, 0.5, 0.5, 0.5])


def test_default_grid_shape():
    pts = grid_points(cylindrical_sys32().grid)
    assert len(pts) == 25
    assert all(p[2] == 0.5 and p[3] == 0.5 for p in pts)
    assert min(p[0] for p in pts) == 0.1 and max(p[1] for p in pts) == 0.9


@pytest.mark.parametrize("direction", [(1, 0, 0), (0.6, 0.8, 0)])
def test_cone_entries(direction):
    spec = minkowski_lightcone(*direction)
    assert spec.target_system is CrVariant.SYS32
    s = residuals_at(spec.target_system, spec.metric, spec.field, X)
    assert s.max_residual() == 0 and s.max_constraint() <= 1e-15


def test_cone_rejects_non_unit_direction():
    with pytest.raises(SolutionParamError):
        minkowski_lightcone(1, 1, 0)


def test_sys32_substitution_values():
    spec = cylindrical_sys32()
    beta = spec.field.at(X)
    assert beta[0] == pytest.approx(1 / 2.04, rel=1e-14)
    assert beta[1] == pytest.approx(0.4901961, abs=1e-7)
    assert spec.metric.at(X)[0, 0] == pytest.approx(4.1616, rel=1e-14)
    assert spec.expected_curvature == "nonzero"


def test_sys32_reparameterized_family():
    spec = cylindrical_sys32(W="3 + s^2", rho="r^3 + r", tau="exp(t)", p=2)
    for x in grid_points(spec.grid)[::3]:
        s = residuals_at("Sys32", spec.metric, spec.field, x)
        assert s.max_residual() <= 1e-8 and s.max_constraint() <= 1e-8


def test_sys32_curvature_nonzero():
    spec = cylindrical_sys32()
    assert max(riemann_at(spec.metric, x).max_abs for x in grid_points(spec.grid)[::6]) >= 1e-4


def test_sys32_preconditions():
    with pytest.raises(SolutionParamError):
        cylindrical_sys32(p=0)
    spec = cylindrical_sys32(W="s")
    with pytest.raises(SolutionParamError, match="W"):
        spec.check_point([0.5, 0.2, 0, 0])


def test_sys19a_display_values():
    spec = cylindrical_sys19a()
    beta = spec.field.at(X)
    q = math.sqrt(2.04**2 - 1)
    assert q == pytest.approx(1.7781, abs=1e-4)
    assert beta[2] == pytest.approx(q / math.sqrt(2), rel=1e-14)
    assert beta[2] == pytest.approx(1.2572, abs=1e-4)
    assert spec.target_system is CrVariant.SYS19A


def test_sys19a_satisfies_its_system_and_is_flat():
    spec = cylindrical_sys19a()
    for x in grid_points(spec.grid)[::4]:
        s = residuals_at("Sys19a", spec.metric, spec.field, x)
        assert s.max_residual() <= 1e-8
        assert s.constraints["eq21"] <= 1e-10
        assert riemann_at(spec.metric, x).max_abs <= 1e-6


def test_sys19a_display_is_not_isotropic():
    # g_ij beta^i beta^j = 2 - 2 W^2 for the display as written
    spec = cylindrical_sys19a()
    s = residuals_at("Sys19a", spec.metric, spec.field, X)
    assert s.constraints["eq20"] == pytest.approx(2 * 2.04**2 - 2, rel=1e-12)


def test_sys19a_precondition():
    spec = cylindrical_sys19a(W="0.5 + s^2")
    with pytest.raises(SolutionParamError, match="W\\^2 - 1"):
        spec.check_point(X)


def test_obstruction_anchor_values():
    assert spherical_obstruction_value(2, math.pi / 4) == pytest.approx(-0.07106, abs=1e-5)
    assert spherical_obstruction_value(2, math.pi / 3) == pytest.approx(-0.19245, abs=1e-5)
    diff = spherical_obstruction_value(2, math.pi / 4) - spherical_obstruction_value(2, math.pi / 3)
    assert diff == pytest.approx(0.1214, abs=1e-4)


def test_obstruction_vanishes_at_h_one():
    for th in np.linspace(0.1, 1.5, 15):
        assert abs(spherical_obstruction_value(1.0, th)) <= 1e-15
    assert ObstructionFunction(1.0).variation() <= 1e-15


@pytest.mark.parametrize("H", np.linspace(1.2, 5, 9))
def test_obstruction_varies_for_h_not_one(H):
    assert ObstructionFunction(float(H)).variation() > 0.01


def test_obstruction_guards():
    with pytest.raises(SolutionParamError):
        spherical_obstruction_value(0, 1.0)
    # at theta = pi/2 the denominator reduces to sin(pi/(2H)), zero for H = 1/2
    with pytest.raises(ZeroDivisionError):
        spherical_obstruction_value(0.5, math.pi / 2)


def test_catalog_lookup():
    assert catalog_names() == ["cyl-sys19a", "cyl-sys32", "minkowski-cone", "spherical-obstruction"]
    assert get_solution("cyl-sys32", p=2).parameters["p"] == 2
    with pytest.raises(KeyError, match="available"):
        get_solution("kerr")
    with pytest.raises(SolutionParamError):
        get_solution("cyl-sys32", q=1)
