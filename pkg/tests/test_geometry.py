import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_factor
from prak.geometry import (CurveDomainError, MetricField, SingularMetricError, StencilDomainError,
                           VectorField4, christoffels_at, classify_curvature,
                           covariant_derivative_at, metric_compatibility_residual,
                           null_geodesic_residual, riemann_at, trace_isotropic_curve)
from prak.linalg4 import ETA
from prak.solutions import cylindrical_sys32, minkowski_lightcone

MINK = MetricField.constant(ETA)
POLAR = MetricField.diagonal([1, -1, "-x1^2", -1])
CONE = VectorField4.constant([1, 0.6, 0.8, 0])


def random_expression_metric(rng):
    """Constant Lorentzian background plus small smooth perturbations."""
    A = random_factor(rng, lo=0.8, hi=2.0, off=0.5)
    g = A @ ETA @ A.T
    funcs = ["sin", "cos", "exp"]
    upper = {}
    for i in range(4):
        for j in range(i, 4):
            f = funcs[int(rng.integers(3))]
            k = int(rng.integers(4))
            c = float(rng.uniform(-0.05, 0.05))
            w = float(rng.uniform(0.5, 2))
            upper[(i, j)] = f"{float(g[i, j])!r} + {c!r}*{f}(x{k}*{w!r})".replace("+ -", "- ")
    return MetricField(upper)


def test_minkowski_christoffels_vanish():
    assert np.all(christoffels_at(MINK, [0.1, 0.2, 0.3, 0.4]) == 0)


def test_flat_polar_christoffels():
    gam = christoffels_at(POLAR, [0, 0.5, 0, 0])
    assert gam[2, 1, 2] == pytest.approx(2.0, abs=1e-14)
    assert gam[2, 2, 1] == pytest.approx(2.0, abs=1e-14)
    assert gam[1, 2, 2] == pytest.approx(-0.5, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_christoffel_symmetry_and_compatibility(seed):
    rng = np.random.default_rng(seed)
    g = random_expression_metric(rng)
    x = rng.uniform(-1, 1, 4)
    gam = christoffels_at(g, x)
    assert np.array_equal(gam, np.swapaxes(gam, 1, 2))
    assert metric_compatibility_residual(g, x) <= 1e-10


def test_covariant_derivative_examples():
    x = [0.2, 0.5, 0.1, 0.3]
    assert np.all(covariant_derivative_at(CONE, MINK, x) == 0)
    D = covariant_derivative_at(VectorField4(["x1", 0, 0, 0]), MINK, x)
    expected = np.zeros((4, 4))
    expected[0, 1] = 1
    np.testing.assert_array_equal(D, expected)


def test_null_geodesic_residual_examples():
    np.testing.assert_array_equal(null_geodesic_residual(CONE, MINK, [0.1, 0.2, 0.3, 0.4]), 0)
    res = null_geodesic_residual(VectorField4([1, "x1", 0, 0]), MINK, [0, 0.5, 0, 0])
    assert res[1] == pytest.approx(0.5)
    spec = cylindrical_sys32()
    for x in ([0.3, 0.5, 0.5, 0.5], [0.8, 0.1, 0.5, 0.5]):
        assert np.max(np.abs(null_geodesic_residual(spec.field, spec.metric, x))) <= 1e-8


def test_riemann_examples():
    assert riemann_at(MINK, [0, 0, 0, 0]).max_abs == 0
    assert riemann_at(POLAR, [0.1, 0.5, 0.3, 0.2]).max_abs <= 1e-7
    spec = cylindrical_sys32()
    R = riemann_at(spec.metric, [0.3, 0.5, 0.5, 0.5])
    assert R.max_abs >= 1e-4
    assert R.antisymmetry_residual() <= 1e-8
    assert R.bianchi_residual() <= 1e-8


def test_plain_central_differences_are_coarser():
    spec = cylindrical_sys32()
    x = [0.3, 0.5, 0.5, 0.5]
    fine = riemann_at(spec.metric, x).riem
    coarse = riemann_at(spec.metric, x, h=1e-2, richardson=False).riem
    refined = riemann_at(spec.metric, x, h=1e-2, richardson=True).riem
    assert np.max(np.abs(refined - fine)) < np.max(np.abs(coarse - fine))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_riemann_symmetries_random_metrics(seed):
    rng = np.random.default_rng(seed)
    g = random_expression_metric(rng)
    x = rng.uniform(-1, 1, 4)
    R = riemann_at(g, x)
    assert R.antisymmetry_residual() <= 1e-8
    assert R.bianchi_residual() <= 1e-8
    assert R.pair_symmetry_residual(g.at(x)) <= 1e-7


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_constant_factor_metric_is_flat(seed):
    A = random_factor(np.random.default_rng(seed))
    R = riemann_at(MetricField.constant(A @ ETA @ A.T), [0.3, 0.1, 0.2, 0.4])
    assert R.max_abs <= 1e-9


def test_classification_thresholds():
    assert classify_curvature(1e-7) == "zero"
    assert classify_curvature(1e-3) == "nonzero"
    assert classify_curvature(1e-5) == "indeterminate"


def test_singular_and_stencil_errors():
    g = MetricField.diagonal([1, -1, "-x1^2", -1])
    with pytest.raises(SingularMetricError):
        christoffels_at(g, [0, 0, 0, 0])
    with pytest.raises(StencilDomainError):
        riemann_at(MetricField.diagonal(["sqrt(x1)", -1, -1, -1]), [0, 5e-5, 0, 0])


def test_cone_curve_is_straight():
    tr = trace_isotropic_curve(CONE, MINK, [0, 0, 0, 0], 0.01, 100)
    np.testing.assert_allclose(tr.points, np.outer(tr.tau, CONE.at([0, 0, 0, 0])), atol=1e-14)
    assert tr.max_transport == 0 and tr.max_isotropy <= 1e-15


def test_cylindrical_curve_transports_beta():
    spec = cylindrical_sys32()
    tr = trace_isotropic_curve(spec.field, spec.metric, [0.3, 0.5, 0.5, 0.5], 0.01, 100)
    assert tr.max_transport <= 1e-6
    assert tr.max_isotropy <= 1e-8


def test_curve_reversal_retraces():
    spec = cylindrical_sys32()
    fwd = trace_isotropic_curve(spec.field, spec.metric, [0.3, 0.5, 0.5, 0.5], 0.01, 100)
    back = trace_isotropic_curve(spec.field, spec.metric, fwd.points[-1], -0.01, 100)
    assert np.max(np.abs(back.points[-1] - fwd.points[0])) <= 1e-9


def test_curve_domain_error():
    g = MetricField.diagonal(["ln(x0)", -1, -1, -1])
    with pytest.raises(CurveDomainError):
        trace_isotropic_curve(VectorField4.constant([-1, 0, 0, 0]), g, [0.5, 0, 0, 0], 0.1, 20)
    with pytest.raises(ValueError):
        trace_isotropic_curve(CONE, MINK, [0, 0, 0, 0], 0.0, 5)


def test_perturbed_geodesic_gives_small_transport():
    spec = minkowski_lightcone(0.6, 0.8, 0.0)
    for eps in (1e-3, 1e-5):
        beta = VectorField4([1, f"0.6 + {eps!r}*x0", 0.8, 0])
        x = [0.2, 0.1, 0.1, 0.1]
        geo = np.max(np.abs(null_geodesic_residual(beta, spec.metric, x)))
        tr = trace_isotropic_curve(beta, spec.metric, x, 0.01, 50)
        assert geo == pytest.approx(eps)
        assert tr.max_transport <= 2 * geo
