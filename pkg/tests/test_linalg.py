import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.errors import NotHurwitz
from core.linalg import (
    as_symmetric, is_hurwitz, lambda_max, lambda_min, loewner_leq, lyapunov_residual,
    solve_lyapunov, solve_lyapunov_dual, solve_lyapunov_integral, spectral_abscissa, sym_power,
)


def _hurwitz(rng, n):
    G = rng.standard_normal((n, n)) / np.sqrt(n)
    return G - (spectral_abscissa(G) + 1.0) * np.eye(n)


def _psd(rng, n):
    F = rng.standard_normal((n, n))
    return F @ F.T


def test_scalar_lyapunov():
    assert_allclose(solve_lyapunov([[-1.0]], [[1.0]]), [[0.5]], atol=1e-15)


def test_diagonal_lyapunov():
    X = solve_lyapunov(np.diag([-1.0, -2.0]), np.eye(2))
    assert_allclose(X, np.diag([0.5, 0.25]), atol=1e-14)


def test_triangular_lyapunov_pair():
    A = np.array([[-1.0, 1.0], [0.0, -2.0]])
    X = solve_lyapunov(A, np.eye(2))
    assert_allclose(X, [[1 / 2, 1 / 6], [1 / 6, 1 / 3]], atol=1e-14)
    Y = solve_lyapunov_dual(A, np.eye(2))
    assert_allclose(Y, [[7 / 12, 1 / 12], [1 / 12, 1 / 4]], atol=1e-14)
    assert_allclose(A @ Y + Y @ A.T + np.eye(2), 0.0, atol=1e-14)


def test_not_hurwitz():
    with pytest.raises(NotHurwitz) as info:
        solve_lyapunov([[0.0]], [[1.0]])
    assert info.value.abscissa == 0.0


def test_unknown_method():
    with pytest.raises(ValueError):
        solve_lyapunov([[-1.0]], [[1.0]], method="bogus")


@pytest.mark.parametrize("method", ["kronecker", "schur"])
def test_residual_and_symmetry(rng, method):
    for n in (1, 3, 6):
        A = _hurwitz(rng, n)
        Q = _psd(rng, n)
        X = solve_lyapunov(A, Q, method=method)
        escala = np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(Q)
        assert lyapunov_residual(A, X, Q) <= 1e-8 * escala
        assert np.array_equal(X, X.T)
        assert lambda_min(X) >= -1e-10


def test_methods_agree(rng):
    A = _hurwitz(rng, 5)
    Q = _psd(rng, 5)
    assert_allclose(solve_lyapunov(A, Q), solve_lyapunov(A, Q, method="schur"), rtol=1e-9, atol=1e-12)


def test_integral_representation_agrees(rng):
    for n in (1, 2, 5):
        A = _hurwitz(rng, n)
        Q = _psd(rng, n) + np.eye(n)
        assert_allclose(solve_lyapunov_integral(A, Q), solve_lyapunov(A, Q), atol=1e-6)


def test_dual_is_transpose_problem(rng):
    A = _hurwitz(rng, 4)
    S = _psd(rng, 4) + np.eye(4)
    Y = solve_lyapunov_dual(A, S)
    assert np.linalg.norm(A @ Y + Y @ A.T + S) <= 1e-9 * (1 + np.linalg.norm(Y))


def test_monotone_in_rhs(rng):
    A = _hurwitz(rng, 4)
    O = _psd(rng, 4)
    Q = O + _psd(rng, 4)
    assert loewner_leq(solve_lyapunov(A, O), solve_lyapunov(A, Q), tol=1e-9)


def test_spectral_abscissa_and_hurwitz():
    A = np.array([[-1.0, 5.0], [0.0, -3.0]])
    assert spectral_abscissa(A) == pytest.approx(-1.0)
    assert is_hurwitz(A)
    assert not is_hurwitz(A, margin=2.0)
    assert not is_hurwitz(np.zeros((2, 2)))


def test_loewner_order():
    assert loewner_leq(np.eye(2), 2 * np.eye(2))
    assert not loewner_leq(2 * np.eye(2), np.eye(2))
    assert loewner_leq(np.eye(2) + 1e-12, np.eye(2), tol=1e-9)


def test_eigen_helpers():
    S = np.diag([3.0, 1.0, 2.0])
    assert lambda_min(S) == 1.0
    assert lambda_max(S) == 3.0
    assert_allclose(sym_power(S, 0.5) @ sym_power(S, 0.5), S, atol=1e-14)
    assert_allclose(sym_power(S, 0.0), np.eye(3))


def test_as_symmetric_rejects():
    with pytest.raises(ValueError):
        as_symmetric([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        as_symmetric([[1.0, np.nan], [np.nan, 1.0]])
