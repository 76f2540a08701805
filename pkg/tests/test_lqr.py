import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.descent import optimal_evaluation
from core.errors import NotOptimal, NotStabilizing
from core.lqr import (
    Plant, are_residual, coercivity_lower_bound, cost, dominance_bound, evaluate, exact_gap,
    gap_bounds, hessian_quadratic_form, kalman_rank, ray_direction_norm, trace_y_bound,
    validate_plant, x_prime, y_prime_bound, y_theta_bound,
)

K_STAR_S1 = math.sqrt(2.0) - 1.0


def _fd_gradient(p, K, h=1e-5):
    G = np.zeros_like(K)
    for idx in np.ndindex(*K.shape):
        E = np.zeros_like(K)
        E[idx] = h
        G[idx] = (cost(p, K + E) - cost(p, K - E)) / (2 * h)
    return G


class TestScalarOracle:
    def test_evaluate_at_zero(self, s1):
        ev = evaluate(s1, [[0.0]])
        for valor, esperado in ((ev.X, 0.5), (ev.Y, 0.5), (ev.N, -0.5), (ev.grad, -0.5)):
            assert_allclose(valor, [[esperado]], atol=1e-12)
        assert ev.f == pytest.approx(0.5, abs=1e-12)
        assert ev.abscissa == -1.0

    def test_closed_form_cost(self, s1):
        for k in (-0.5, 0.0, 0.3, 2.0):
            assert cost(s1, [[k]]) == pytest.approx((1 + k * k) / (2 * (1 + k)), rel=1e-12)

    def test_not_stabilizing(self, s1):
        with pytest.raises(NotStabilizing):
            evaluate(s1, [[-2.0]])
        with pytest.raises(NotStabilizing):
            evaluate(s1, [[-1.0]])

    def test_hessian_and_x_prime(self, s1):
        assert hessian_quadratic_form(s1, [[0.0]], [[1.0]]) == pytest.approx(2.0, abs=1e-12)
        assert_allclose(x_prime(s1, [[0.0]], [[1.0]], np.array([[0.5]])), [[-0.5]], atol=1e-12)

    def test_certificates(self, s1):
        ev = evaluate(s1, [[0.0]])
        opt = evaluate(s1, [[K_STAR_S1]])
        gap = ev.f - opt.f
        assert coercivity_lower_bound(s1, [[0.0]]) == pytest.approx(0.5)
        assert exact_gap(s1, ev, opt.K) == pytest.approx(gap, abs=1e-12)
        limites = gap_bounds(s1, ev, opt)
        assert limites.lower <= gap + 1e-12 and gap <= limites.upper
        assert dominance_bound(s1, ev, opt) == pytest.approx(limites.upper)
        assert trace_y_bound(s1, 0.5) == pytest.approx(0.5)
        assert y_theta_bound(s1, 0.5) == pytest.approx(0.5)
        assert ray_direction_norm(s1, ev) == pytest.approx(0.25)
        assert y_prime_bound(s1, 0.5, 0.25) == pytest.approx(0.5)
        assert y_theta_bound(s1, 0.0) == 0.0 and y_prime_bound(s1, 0.0, 0.25) == 0.0

    def test_are_residual_at_optimum(self, s1):
        assert are_residual(s1, np.array([[K_STAR_S1]])) <= 1e-14

    def test_gap_bounds_require_optimum(self, s1):
        ev = evaluate(s1, [[0.0]])
        with pytest.raises(NotOptimal):
            gap_bounds(s1, ev, ev)


class TestValidation:
    def test_valid(self, s1):
        assert validate_plant(s1) == []
        assert kalman_rank(s1) == 1

    def test_q_not_psd(self):
        p = Plant.create(A=-np.eye(2), B=np.eye(2), Q=np.diag([1.0, -1.0]), R=np.eye(2))
        assert "Q not PSD" in validate_plant(p)

    def test_r_not_pd(self):
        p = Plant.create(A=-1.0, B=1.0, Q=1.0, R=0.0)
        assert "R not PD" in validate_plant(p)

    def test_sigma_not_pd(self):
        p = Plant.create(A=-1.0, B=1.0, Q=1.0, R=1.0, Sigma=0.0)
        assert "Sigma not PD" in validate_plant(p)

    def test_b_rows(self):
        p = Plant.create(A=-np.eye(2), B=np.ones((3, 1)), Q=np.eye(2), R=1.0)
        assert validate_plant(p) == ["B has 3 rows, expected 2"]

    def test_not_symmetric(self):
        p = Plant.create(A=-np.eye(2), B=np.eye(2), Q=[[1.0, 1.0], [0.0, 1.0]], R=np.eye(2))
        assert "Q not symmetric" in validate_plant(p)


def test_gradient_matches_finite_differences(rng, instance_factory):
    for _ in range(50):
        p, K = instance_factory(rng)
        ev = evaluate(p, K)
        fd = _fd_gradient(p, ev.K)
        assert np.max(np.abs(fd - ev.grad)) <= 1e-5 * max(np.max(np.abs(ev.grad)), 1e-3)


def test_hessian_matches_gradient_differences(rng, instance_factory):
    h = 1e-5
    for _ in range(50):
        p, K = instance_factory(rng)
        E = rng.standard_normal(K.shape)
        E /= np.linalg.norm(E)
        fd = np.sum((evaluate(p, K + h * E).grad - evaluate(p, K - h * E).grad) * E) / (2 * h)
        exato = hessian_quadratic_form(p, K, E)
        assert abs(fd - exato) <= 1e-4 * max(abs(exato), 1.0)


def test_x_prime_matches_differences(rng, instance_factory):
    p, K = instance_factory(rng, n=4, m=2)
    E = rng.standard_normal(K.shape)
    h = 1e-6
    ev = evaluate(p, K)
    fd = (evaluate(p, K + h * E).X - evaluate(p, K - h * E).X) / (2 * h)
    assert_allclose(x_prime(p, K, E, ev.X), fd, atol=1e-6 * max(1.0, np.abs(fd).max()))


def test_schur_method_agrees(rng, instance_factory):
    p, K = instance_factory(rng, n=5, m=3)
    a = evaluate(p, K)
    b = evaluate(p, K, method="schur")
    assert_allclose(a.grad, b.grad, rtol=1e-8, atol=1e-12)
    assert a.f == pytest.approx(b.f, rel=1e-10)


def test_exact_gap_identity_random(rng, instance_factory):
    for _ in range(10):
        p, K = instance_factory(rng)
        opt = optimal_evaluation(p, np.zeros_like(K))
        ev = evaluate(p, K)
        assert exact_gap(p, ev, opt.K) == pytest.approx(ev.f - opt.f, abs=1e-8 * max(1.0, ev.f))
        limites = gap_bounds(p, ev, opt)
        assert limites.lower <= ev.f - opt.f + 1e-9 <= limites.upper + 2e-9
        assert ev.f - opt.f <= dominance_bound(p, ev, opt) + 1e-9
        assert coercivity_lower_bound(p, K) <= ev.f
