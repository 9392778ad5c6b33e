import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_metric
from prak.algebra import (AlgebraParamError, AlgebraParams, algebra_identity_report,
                          alpha_from_beta, beta_from_alpha, build_algebra_point, conjugate,
                          kappa_matrix, multiply_elements, multiply_k, parallel_residual,
                          with_corrupted_h)
from prak.linalg4 import ETA, rank_and_det


def test_kappa_examples():
    np.testing.assert_array_equal(
        kappa_matrix(AlgebraParams(1, 0, (1, 0, 0))),
        [[1, -1, 0, 0], [-1, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    np.testing.assert_array_equal(
        kappa_matrix(AlgebraParams(1, 2, (0, 0, 1))),
        [[1, 0, 0, -1], [0, 1, 2, 0], [0, -2, 1, 0], [-1, 0, 0, 1]])


def test_params_validation():
    with pytest.raises(AlgebraParamError):
        AlgebraParams(alpha=(1, 1, 0))
    with pytest.raises(AlgebraParamError):
        AlgebraParams(a=0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_kappa_rank_three(seed):
    p = AlgebraParams.random(np.random.default_rng(seed))
    rank, det = rank_and_det(kappa_matrix(p), 1e-10)
    assert rank == 3
    assert abs(det) <= 1e-10


def test_flat_point():
    p = AlgebraParams(1.0, 0.7, (0.6, 0.8, 0.0))
    pt = build_algebra_point(ETA, p)
    np.testing.assert_array_equal(pt.A, np.eye(4))
    np.testing.assert_array_equal(pt.B, np.eye(4))
    np.testing.assert_allclose(pt.h, pt.kappa)
    np.testing.assert_allclose(pt.beta, [1, 0.6, 0.8, 0])
    pt = build_algebra_point(ETA, AlgebraParams(1, 0, (1, 0, 0)))
    np.testing.assert_allclose(pt.beta, [1, 1, 0, 0])
    assert pt.beta @ ETA @ pt.beta == 0


def test_curved_point_eq22():
    g = np.diag([1.0, -1.0, -1.0, -1.0])
    g[0, 1] = g[1, 0] = 0.5
    pt = build_algebra_point(g, AlgebraParams(1, 0.5, (0.6, 0.8, 0)))
    assert np.max(np.abs(pt.h @ pt.beta)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_alpha_beta_round_trip(seed):
    rng = np.random.default_rng(seed)
    g, A = random_metric(rng)
    p = AlgebraParams.random(rng)
    pt = build_algebra_point(g, p)
    np.testing.assert_allclose(alpha_from_beta(beta_from_alpha(p.alpha_full, pt.B), pt.A),
                               p.alpha_full, atol=1e-12 * np.max(np.abs(A)) ** 2)


def test_product_examples():
    pt = build_algebra_point(ETA, AlgebraParams(1, 0, (1, 0, 0)))
    y = np.array([1.0, 2.0, 0.0, 0.0])
    np.testing.assert_allclose(multiply_elements(y, conjugate(y), pt), -3 * np.array([1, 1, 0, 0]))
    rng = np.random.default_rng(3)
    for _ in range(10):
        z = rng.normal(size=4)
        np.testing.assert_allclose(multiply_elements(z, pt.R, pt), 0, atol=1e-14)
        np.testing.assert_allclose(multiply_elements(pt.R, z, pt), 0, atol=1e-14)


def test_conjugate():
    np.testing.assert_array_equal(conjugate([1, 2, 3, 4]), [1, -2, -3, -4])
    np.testing.assert_array_equal(conjugate(conjugate([1, 2, 3, 4])), [1, 2, 3, 4])
    np.testing.assert_array_equal(conjugate([1, 1, 0, 0]), [1, -1, 0, 0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_conjugate_product_in_k_basis(seed):
    rng = np.random.default_rng(seed)
    p = AlgebraParams.random(rng)
    pt = build_algebra_point(ETA, p)
    y = rng.uniform(-2, 2, size=4)
    expected = p.a * (y @ ETA @ y) * p.alpha_full
    np.testing.assert_allclose(multiply_k(y, conjugate(y), pt), expected, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_products_are_parallel_to_beta(seed):
    rng = np.random.default_rng(seed)
    g, _ = random_metric(rng)
    pt = build_algebra_point(g, AlgebraParams.random(rng))
    eta_el, rho = rng.normal(size=(2, 4))
    assert parallel_residual(multiply_elements(eta_el, rho, pt), pt.beta) <= 1e-10
    # associativity is vacuous: both triple products vanish
    w = rng.normal(size=4)
    left = multiply_elements(multiply_elements(eta_el, rho, pt), w, pt)
    right = multiply_elements(eta_el, multiply_elements(rho, w, pt), pt)
    assert np.max(np.abs(left)) <= 1e-9 and np.max(np.abs(right)) <= 1e-9


def test_identity_report_flat():
    for p in (AlgebraParams(), AlgebraParams(2.0, -1.5, (0, 0.6, 0.8))):
        rep = algebra_identity_report(build_algebra_point(ETA, p), trials=20)
        assert rep.passed, rep.lines()
        assert all(v <= 1e-12 for v in rep.residuals.values())
        assert rep.extra["kappa_rank"] == 3


def test_identity_report_detects_corruption():
    g, _ = random_metric(np.random.default_rng(5))
    pt = build_algebra_point(g, AlgebraParams(1, 0.5, (0.6, 0.8, 0)))
    assert algebra_identity_report(pt).passed
    bad = algebra_identity_report(with_corrupted_h(pt, 1e-3))
    # h_01 enters the left order with weight beta^0 = 1/a_0^0 and the right with beta^1
    eq22 = max(bad.residuals["eq22_right"], bad.residuals["eq22_left"])
    assert eq22 >= 1e-4
    assert not bad.passed
