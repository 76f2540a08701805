"""
Custo LQR de tempo contínuo como função matricial sobre ganhos estabilizantes

Avaliação de f, ∇f, forma quadrática da Hessiana e certificados analíticos
(coercividade, dominância do gradiente, limites de traço e de derivada).
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.linalg as la
from numpy.typing import ArrayLike

from .errors import NotHurwitz, NotOptimal, NotStabilizing
from .linalg import (
    Matrix, as_square, lambda_max, lambda_min, norm2, solve_lyapunov,
    solve_lyapunov_dual, spectral_abscissa, sym, EIG_TOL,
)

logger = logging.getLogger(__name__)

PLANT_TOL = 1e-10
STATIONARITY_RTOL = 1e-10


@dataclass(frozen=True)
class Plant:
    """Instância do problema: ẋ = Ax + Bu, custo com pesos Q, R e Gram Σ das condições iniciais"""

    A: Matrix
    B: Matrix
    Q: Matrix
    R: Matrix
    Sigma: Matrix

    @classmethod
    def create(cls, A: ArrayLike, B: ArrayLike, Q: ArrayLike, R: ArrayLike,
               Sigma: Optional[ArrayLike] = None) -> "Plant":
        """Constrói a planta convertendo escalares/listas em matrizes; Σ padrão = I"""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        R = np.atleast_2d(np.asarray(R, dtype=float))
        if Sigma is None:
            Sigma = np.eye(A.shape[0])
        Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
        return cls(A=A, B=B, Q=Q, R=R, Sigma=Sigma)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class Evaluation:
    """Tudo o que é calculado em um ganho K"""

    K: Matrix
    X: Matrix
    Y: Matrix
    N: Matrix
    f: float
    grad: Matrix
    abscissa: float

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.grad, "fro"))


@dataclass(frozen=True)
class GapBounds:
    lower: float
    upper: float


def validate_plant(p: Plant, tol: float = PLANT_TOL) -> List[str]:
    """
    Verifica os invariantes da planta

    Returns:
        Lista de violações; vazia sse a planta é válida
    """
    violacoes = []
    try:
        as_square(p.A, "A")
    except ValueError as e:
        return [f"A invalid: {e}"]
    n = p.A.shape[0]

    if p.B.ndim != 2 or p.B.shape[0] != n:
        violacoes.append(f"B has {p.B.shape[0]} rows, expected {n}")
    m = p.B.shape[1]

    esperado = {"Q": (n, n), "R": (m, m), "Sigma": (n, n)}
    for nome, forma in esperado.items():
        M = getattr(p, nome)
        if M.shape != forma:
            violacoes.append(f"{nome} has shape {M.shape}, expected {forma}")
    for nome in ("A", "B", "Q", "R", "Sigma"):
        if not np.all(np.isfinite(getattr(p, nome))):
            violacoes.append(f"{nome} has non-finite entries")
    if violacoes:
        return violacoes

    for nome in ("Q", "R", "Sigma"):
        M = getattr(p, nome)
        if np.linalg.norm(M - M.T, "fro") > 1e-8 * max(1.0, np.linalg.norm(M, "fro")):
            violacoes.append(f"{nome} not symmetric")
    if violacoes:
        return violacoes

    if lambda_min(p.Q) < -tol:
        violacoes.append("Q not PSD")
    if lambda_min(p.R) <= tol:
        violacoes.append("R not PD")
    if lambda_min(p.Sigma) <= tol:
        violacoes.append("Sigma not PD")
    return violacoes


def kalman_rank(p: Plant) -> int:
    """Posto de [B, AB, …, A^{n−1}B] (informativo, não exigido)"""
    blocos = [p.B]
    for _ in range(p.n - 1):
        blocos.append(p.A @ blocos[-1])
    return int(np.linalg.matrix_rank(np.hstack(blocos)))


def as_gain(p: Plant, K: ArrayLike) -> Matrix:
    """Converte e valida um ganho m×n com entradas finitas"""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (p.m, p.n):
        raise ValueError(f"ganho com forma {K.shape}, esperado {(p.m, p.n)}")
    if not np.all(np.isfinite(K)):
        raise ValueError("ganho com entradas não finitas")
    return K


def closed_loop(p: Plant, K: Matrix) -> Matrix:
    return p.A - p.B @ K


def stationarity_tol(f: float) -> float:
    """Tolerância padrão de estacionariedade: 1e−10·max(1, f)"""
    return STATIONARITY_RTOL * max(1.0, abs(f))


def evaluate(p: Plant, K: ArrayLike, method: str = "kronecker") -> Evaluation:
    """
    Avalia o custo e o gradiente em K

    Args:
        p: Planta
        K: Ganho m×n
        method: Método do solver de Lyapunov

    Returns:
        Evaluation com X, Y, N = RK − BᵀX, f = Tr(XΣ), ∇f = 2NY

    Raises:
        NotStabilizing: A − BK não é Hurwitz
    """
    K = as_gain(p, K)
    AK = closed_loop(p, K)
    abscissa = spectral_abscissa(AK)
    if not abscissa < -EIG_TOL:
        raise NotStabilizing(f"K não é estabilizante (abscissa de A − BK = {abscissa:.6g})", abscissa)

    try:
        X = solve_lyapunov(AK, p.Q + K.T @ p.R @ K, method=method)
        Y = solve_lyapunov_dual(AK, p.Sigma, method=method)
    except NotHurwitz as e:
        raise NotStabilizing(str(e), e.abscissa) from e

    N = p.R @ K - p.B.T @ X
    grad = 2.0 * N @ Y
    f = float(np.trace(X @ p.Sigma))
    return Evaluation(K=K, X=X, Y=Y, N=N, f=f, grad=grad, abscissa=abscissa)


def cost(p: Plant, K: ArrayLike) -> float:
    return evaluate(p, K).f


def x_prime(p: Plant, K: ArrayLike, E: ArrayLike, X: Matrix, method: str = "kronecker") -> Matrix:
    """
    Derivada direcional X′(K)[E]

    Resolve A_Kᵀ X′ + X′ A_K + EᵀN + NᵀE = 0 com N = RK − BᵀX.

    Raises:
        NotStabilizing: A − BK não é Hurwitz
    """
    K = as_gain(p, K)
    E = as_gain(p, E)
    N = p.R @ K - p.B.T @ X
    C = E.T @ N + N.T @ E
    try:
        return solve_lyapunov(closed_loop(p, K), sym(C), method=method)
    except NotHurwitz as e:
        raise NotStabilizing(str(e), e.abscissa) from e


def hessian_quadratic_form(p: Plant, K: ArrayLike, E: ArrayLike,
                           ev: Optional[Evaluation] = None) -> float:
    """
    ⟨∇²f(K)[E], E⟩ = 2Tr(EᵀREY) − 4Tr(EᵀBᵀX′(K)[E]Y)
    """
    if ev is None:
        ev = evaluate(p, K)
    E = as_gain(p, E)
    Xp = x_prime(p, ev.K, E, ev.X)
    return float(2.0 * np.trace(E.T @ p.R @ E @ ev.Y) - 4.0 * np.trace(E.T @ p.B.T @ Xp @ ev.Y))


def coercivity_lower_bound(p: Plant, K: ArrayLike) -> float:
    """λ_min(Σ)(λ_min(R)‖K‖_F² + Tr Q) / (2‖A‖_F + 2‖B‖_F‖K‖_F)"""
    K = as_gain(p, K)
    nk = np.linalg.norm(K, "fro")
    numerador = lambda_min(p.Sigma) * (lambda_min(p.R) * nk ** 2 + np.trace(p.Q))
    denominador = 2.0 * np.linalg.norm(p.A, "fro") + 2.0 * np.linalg.norm(p.B, "fro") * nk
    return float(numerador / denominador)


def _exigir_otimo(opt: Evaluation):
    if opt.grad_norm > stationarity_tol(opt.f):
        raise NotOptimal(f"avaliação de referência não estacionária (‖∇f‖_F = {opt.grad_norm:.3e})")


def gap_bounds(p: Plant, ev: Evaluation, opt: Evaluation) -> GapBounds:
    """
    Sanduíche de f(K) − f(K*): crescimento quadrático e dominância do gradiente

    lower = λ₁(Y(K))λ₁(R)‖K − K*‖_F², upper = (‖Y*‖₂/λ₁(R))Tr(NᵀN)

    Raises:
        NotOptimal: opt não é estacionária
    """
    _exigir_otimo(opt)
    lam_r = lambda_min(p.R)
    diff = ev.K - opt.K
    lower = lambda_min(ev.Y) * lam_r * float(np.sum(diff * diff))
    upper = norm2(opt.Y) / lam_r * float(np.sum(ev.N * ev.N))
    return GapBounds(lower=lower, upper=upper)


def exact_gap(p: Plant, ev: Evaluation, K_star: Matrix) -> float:
    """f(K) − f(K*) = Tr((K − K*)ᵀR(K − K*)Y(K))"""
    diff = ev.K - K_star
    return float(np.trace(diff.T @ p.R @ diff @ ev.Y))


def dominance_bound(p: Plant, ev: Evaluation, opt: Evaluation) -> float:
    """Forma pontual da dominância: ‖Y*‖₂‖∇f(K)‖_F² / (4λ₁(R)λ₁(Y(K))²)"""
    _exigir_otimo(opt)
    return norm2(opt.Y) * ev.grad_norm ** 2 / (4.0 * lambda_min(p.R) * lambda_min(ev.Y) ** 2)


def trace_y_bound(p: Plant, f0: float) -> float:
    """Tr(Y) ≤ f(K₀)λ_max(Σ)/(λ_min(Q)λ_min(Σ)) sobre o subnível de K₀"""
    lam_q = lambda_min(p.Q)
    if lam_q <= 0:
        return math.inf
    return f0 * lambda_max(p.Sigma) / (lam_q * lambda_min(p.Sigma))


def y_theta_bound(p: Plant, fK: float) -> float:
    """‖Y(K′)‖₂ ≤ f(K)/λ₁(Q) para K′ no subnível de K"""
    lam_q = lambda_min(p.Q)
    if fK == 0:
        return 0.0
    if lam_q <= 0:
        return math.inf
    return fK / lam_q


def ray_direction_norm(p: Plant, ev: Evaluation) -> float:
    """‖B N Y‖₂ no ganho base"""
    return norm2(p.B @ ev.N @ ev.Y)


def y_prime_bound(p: Plant, fK: float, dir_norm: float) -> float:
    """‖Y′(θ)‖₂ ≤ 4‖BNY‖₂ f(K)/(λ₁(Q)λ₁(Σ)) ao longo do raio de descida"""
    if fK == 0 or dir_norm == 0:
        return 0.0
    lam_q = lambda_min(p.Q)
    if lam_q <= 0:
        return math.inf
    return 4.0 * dir_norm * fK / (lam_q * lambda_min(p.Sigma))


def are_residual(p: Plant, X: Matrix) -> float:
    """‖AᵀX + XA − XBR⁻¹BᵀX + Q‖_F"""
    G = p.B @ la.solve(p.R, p.B.T @ X, assume_a="pos")
    return float(np.linalg.norm(p.A.T @ X + X @ p.A - X @ G + p.Q, "fro"))
