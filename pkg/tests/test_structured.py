import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.benchmarks import path_graph
from core.errors import EmptyPattern, NotStabilizing, OffPattern, SingularQ
from core.lqr import Plant, evaluate
from core.structured import (
    PGDOptions, SparsityPattern, adaptive_lipschitz, is_canonical_input, lipschitz_bound,
    load_pattern, pattern_from_graph, project, projected_gradient_descent,
    restricted_hessian_samples,
)
from core.traces import Status, fit_line


def _fora_do_padrao(trace, pat):
    return [r.K[~pat.mask] for r in trace.records]


class TestPattern:
    def test_empty(self):
        with pytest.raises(EmptyPattern):
            SparsityPattern(np.zeros((2, 2), dtype=bool))

    def test_read_only(self):
        pat = SparsityPattern.full(2, 2)
        with pytest.raises(ValueError):
            pat.mask[0, 0] = False

    def test_from_graph(self, lollipop):
        pat = lollipop.pattern
        assert pat.shape == (20, 20)
        assert np.all(np.diag(pat.mask))
        assert pat.mask[9, 10] and pat.mask[10, 9]
        assert pat.mask[0, 9]
        assert not pat.mask[0, 19]
        assert np.array_equal(pat.mask, pat.mask.T)
        assert pat.mask.sum() == 20 + 2 * 55

    def test_from_path_graph(self):
        pat = pattern_from_graph(path_graph(3), 3, 3)
        esperado = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]], dtype=bool)
        assert np.array_equal(pat.mask, esperado)

    def test_load(self, tmp_path):
        caminho = tmp_path / "pattern.txt"
        caminho.write_text("1 0\n0 1\n")
        assert np.array_equal(load_pattern(str(caminho)).mask, np.eye(2, dtype=bool))
        caminho.write_text("1 0\n0\n")
        with pytest.raises(ValueError):
            load_pattern(str(caminho))
        with pytest.raises(OSError):
            load_pattern(str(tmp_path / "missing.txt"))

    def test_project(self):
        pat = SparsityPattern(np.eye(2, dtype=bool))
        P = project([[1.0, 2.0], [3.0, 4.0]], pat)
        assert_allclose(P, [[1.0, 0.0], [0.0, 4.0]])
        assert np.array_equal(project(P, pat), P)

    def test_canonical_input(self):
        assert is_canonical_input(np.eye(3))
        assert is_canonical_input(np.eye(3, 2))
        assert not is_canonical_input(2 * np.eye(3))


class TestLipschitz:
    def test_s1_constants(self, s1):
        cert = lipschitz_bound(s1, 0.5)
        assert cert.a == pytest.approx(2.25)
        assert cert.L == pytest.approx(2.125)
        assert cert.step == pytest.approx(1.0 / 2.125)
        assert adaptive_lipschitz(s1, evaluate(s1, [[0.0]])) == pytest.approx(3.25)

    def test_singular_q(self):
        p = Plant.create(A=-1.0, B=1.0, Q=0.0, R=1.0)
        with pytest.raises(SingularQ):
            lipschitz_bound(p, 0.5)

    def test_restricted_hessian_below_l(self, lollipop):
        p = lollipop.plant
        ev = evaluate(p, lollipop.K0)
        cert = lipschitz_bound(p, ev.f)
        amostras = restricted_hessian_samples(p, ev, lollipop.pattern, 20, np.random.default_rng(7))
        assert np.all(amostras <= cert.L)


class TestProjectedGradient:
    def test_full_pattern_is_constant_step_gradient_descent(self, s1):
        pat = SparsityPattern.full(1, 1)
        trace = projected_gradient_descent(s1, pat, [[0.0]], PGDOptions(max_iter=5))
        passo = lipschitz_bound(s1, 0.5).step
        K = np.zeros((1, 1))
        for r in trace.records:
            assert_allclose(r.K, K, rtol=0, atol=1e-15)
            K = K - passo * evaluate(s1, K).grad

    def test_off_pattern_start(self, lollipop):
        K0 = np.zeros((20, 20))
        K0[0, 19] = 0.1
        with pytest.raises(OffPattern):
            projected_gradient_descent(lollipop.plant, lollipop.pattern, K0)

    def test_not_stabilizing_start(self, s1):
        with pytest.raises(NotStabilizing):
            projected_gradient_descent(s1, SparsityPattern.full(1, 1), [[-2.0]])

    def test_lollipop_invariants(self, lollipop):
        p, pat = lollipop.plant, lollipop.pattern
        trace = projected_gradient_descent(p, pat, lollipop.K0, PGDOptions(max_iter=200, adaptive=True))
        f0 = trace.records[0].f
        for fora in _fora_do_padrao(trace, pat):
            assert np.all(fora == 0.0)
        assert np.all(trace.column("f") <= f0)
        assert np.all(trace.column("abscissa") < 0)
        minimos = np.asarray(trace.metadata["min_stationarity_sq"])
        assert np.all(np.diff(minimos) <= 0)
        assert trace.metadata["canonical_B"]
        assert trace.metadata["structured_optimum_may_differ"]

    def test_lollipop_constant_step(self, lollipop):
        p, pat = lollipop.plant, lollipop.pattern
        trace = projected_gradient_descent(p, pat, lollipop.K0, PGDOptions(max_iter=20))
        f = trace.column("f")
        assert np.all(np.diff(f) <= 0)
        assert np.all(trace.column("eta")[:-1] == 1.0 / trace.metadata["L"])

    @pytest.mark.slow
    def test_lollipop_converges(self, lollipop):
        p, pat = lollipop.plant, lollipop.pattern
        trace = projected_gradient_descent(p, pat, lollipop.K0, PGDOptions(tol=1e-6, adaptive=True))
        assert trace.status == Status.CONVERGED
        assert trace.last.stationarity_norm <= 1e-6
        for fora in _fora_do_padrao(trace, pat):
            assert np.all(fora == 0.0)

        minimos = np.asarray(trace.metadata["min_stationarity_sq"])
        k = np.arange(1, minimos.size + 1)
        ok = minimos > 1e-12
        assert fit_line(np.log(k[ok]), np.log(minimos[ok])).slope <= -0.8

        ev = evaluate(p, trace.last.K)
        L = trace.metadata["L"]
        amostras = restricted_hessian_samples(p, ev, pat, 20, np.random.default_rng(11))
        assert np.all(amostras <= L)
