"""
Núcleo de álgebra linear densa: equações de Lyapunov, testes espectrais
e comparações na ordem de Loewner
"""

import logging
import warnings
from typing import Optional

import numpy as np
import scipy.linalg as la
from numpy.typing import ArrayLike, NDArray

from .errors import EigenFailure, NotHurwitz, SingularSystem

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]

SYM_TOL = 1e-8
EIG_TOL = 1e-12
RESIDUAL_RTOL = 1e-8
EIG_FLOOR = 1e-14

LYAPUNOV_METHODS = ("kronecker", "schur")


def as_square(A: ArrayLike, nome: str = "A") -> Matrix:
    """
    Converte para matriz quadrada real n×n, n ≥ 1, com entradas finitas

    Raises:
        ValueError: dimensão inválida ou entradas não finitas
    """
    M = np.atleast_2d(np.asarray(A, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"{nome} deve ser quadrada, recebida com forma {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{nome} contém entradas não finitas")
    return M


def as_symmetric(M: ArrayLike, nome: str = "M", tol: float = SYM_TOL) -> Matrix:
    """
    Valida simetria (‖M − Mᵀ‖_F ≤ tol·max(1, ‖M‖_F)) e devolve a parte simétrica
    """
    S = as_square(M, nome)
    assimetria = np.linalg.norm(S - S.T, "fro")
    if assimetria > tol * max(1.0, np.linalg.norm(S, "fro")):
        raise ValueError(f"{nome} não é simétrica (‖M − Mᵀ‖_F = {assimetria:.3e})")
    return sym(S)


def sym(M: Matrix) -> Matrix:
    return 0.5 * (M + M.T)


def lambda_min(S: Matrix) -> float:
    """λ₁: menor autovalor da parte simétrica"""
    return float(np.linalg.eigvalsh(sym(np.atleast_2d(S)))[0])


def lambda_max(S: Matrix) -> float:
    """λₙ: maior autovalor da parte simétrica"""
    return float(np.linalg.eigvalsh(sym(np.atleast_2d(S)))[-1])


def norm2(M: Matrix) -> float:
    """Norma espectral"""
    return float(np.linalg.norm(np.atleast_2d(M), 2))


def sym_power(S: Matrix, p: float, floor: float = EIG_FLOOR) -> Matrix:
    """
    Potência real de uma matriz simétrica positiva via autodecomposição

    Args:
        S: Matriz simétrica positiva definida
        p: Expoente
        floor: Piso aplicado aos autovalores antes da potência

    Returns:
        S^p simetrizada
    """
    if p == 0:
        return np.eye(S.shape[0])
    if p == 1:
        return sym(S)
    w, V = np.linalg.eigh(sym(S))
    w = np.maximum(w, floor)
    return sym((V * w ** p) @ V.T)


def spectral_abscissa(A: ArrayLike) -> float:
    """
    Maior parte real entre os autovalores de A

    Raises:
        EigenFailure: se a rotina de autovalores não convergir
    """
    M = as_square(A)
    try:
        autovalores = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as e:
        raise EigenFailure(f"autovalores não convergiram: {e}") from e
    if not np.all(np.isfinite(autovalores)):
        raise EigenFailure("autovalores não finitos")
    return float(np.max(autovalores.real))


def is_hurwitz(A: ArrayLike, margin: float = 0.0) -> bool:
    """Verdadeiro sse a abscissa espectral de A é menor que −margin (folga EIG_TOL)"""
    return spectral_abscissa(A) < -margin - EIG_TOL


def loewner_leq(P: ArrayLike, Q: ArrayLike, tol: float = 0.0) -> bool:
    """P ⪯ Q dentro de tol, i.e. λ_min(Q − P) ≥ −tol"""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if P.shape != Q.shape:
        raise ValueError(f"dimensões diferentes: {P.shape} e {Q.shape}")
    return lambda_min(Q - P) >= -tol


def lyapunov_residual(A: Matrix, X: Matrix, Q: Matrix) -> float:
    """‖AᵀX + XA + Q‖_F"""
    return float(np.linalg.norm(A.T @ X + X @ A + Q, "fro"))


def _solve_kronecker(A: Matrix, Q: Matrix) -> Matrix:
    # (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X) = −vec(Q), vec por colunas
    n = A.shape[0]
    I = np.eye(n)
    L = np.kron(I, A.T) + np.kron(A.T, I)
    rhs = -Q.reshape(-1, order="F")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", la.LinAlgWarning)
            x = la.solve(L, rhs)
    except (la.LinAlgError, la.LinAlgWarning) as e:
        raise SingularSystem(f"sistema vetorizado singular (n = {n}): {e}") from e
    return x.reshape((n, n), order="F")


def _solve_schur(A: Matrix, Q: Matrix) -> Matrix:
    # scipy resolve aX + Xaᴴ = q
    try:
        return la.solve_continuous_lyapunov(A.T, -Q)
    except (la.LinAlgError, ValueError) as e:
        raise SingularSystem(f"Bartels–Stewart falhou: {e}") from e


def solve_lyapunov(A: ArrayLike, Q: ArrayLike, method: str = "kronecker",
                   margin: float = 0.0) -> Matrix:
    """
    Resolve AᵀX + XA + Q = 0 para A Hurwitz

    Args:
        A: Matriz de coeficientes (Hurwitz)
        Q: Termo independente simétrico
        method: "kronecker" (sistema vetorizado denso) ou "schur" (Bartels–Stewart)
        margin: Margem exigida na abscissa espectral

    Returns:
        X simétrica; X ⪰ 0 quando Q ⪰ 0

    Raises:
        NotHurwitz: abscissa espectral ≥ −margin
        SingularSystem: sistema numericamente singular
    """
    A = as_square(A, "A")
    Q = as_symmetric(Q, "Q")
    if A.shape != Q.shape:
        raise ValueError(f"dimensões incompatíveis: A {A.shape}, Q {Q.shape}")

    abscissa = spectral_abscissa(A)
    if not abscissa < -margin - EIG_TOL:
        raise NotHurwitz(f"A não é Hurwitz (abscissa espectral {abscissa:.6g})", abscissa)

    if method == "kronecker":
        X = _solve_kronecker(A, Q)
    elif method == "schur":
        X = _solve_schur(A, Q)
    else:
        raise ValueError(f"método de Lyapunov desconhecido: {method}")
    X = sym(X)

    residuo = lyapunov_residual(A, X, Q)
    escala = np.linalg.norm(A, "fro") * np.linalg.norm(X, "fro") + np.linalg.norm(Q, "fro")
    if residuo > RESIDUAL_RTOL * max(escala, np.finfo(float).tiny):
        logger.warning(f"Resíduo de Lyapunov alto: {residuo:.3e} (escala {escala:.3e})")
    return X


def solve_lyapunov_dual(A: ArrayLike, S: ArrayLike, method: str = "kronecker",
                        margin: float = 0.0) -> Matrix:
    """Resolve AY + YAᵀ + S = 0 (mesmo caminho que solve_lyapunov(Aᵀ, S))"""
    return solve_lyapunov(np.asarray(A, dtype=float).T, S, method=method, margin=margin)


def solve_lyapunov_integral(A: ArrayLike, Q: ArrayLike, horizon: Optional[float] = None,
                            steps: int = 4000) -> Matrix:
    """
    Resolve AᵀX + XA + Q = 0 pela representação integral ∫₀^T e^{Aᵀt} Q e^{At} dt

    Quadratura de Simpson composta; e^{Ah} por scaling-and-squaring (scipy expm).
    Usado como segundo caminho independente de solução.

    Args:
        A: Matriz Hurwitz
        Q: Matriz simétrica
        horizon: Horizonte de truncamento T (padrão: 40/|abscissa|)
        steps: Número de subintervalos (par)
    """
    A = as_square(A, "A")
    Q = as_symmetric(Q, "Q")
    abscissa = spectral_abscissa(A)
    if not abscissa < -EIG_TOL:
        raise NotHurwitz(f"A não é Hurwitz (abscissa espectral {abscissa:.6g})", abscissa)
    if horizon is None:
        horizon = 40.0 / abs(abscissa)
    if steps % 2:
        steps += 1

    h = horizon / steps
    E = la.expm(A * h)
    Phi = np.eye(A.shape[0])
    X = np.zeros_like(Q)
    for k in range(steps + 1):
        peso = 1.0 if k in (0, steps) else (4.0 if k % 2 else 2.0)
        X += peso * (Phi.T @ Q @ Phi)
        Phi = Phi @ E
    return sym(X * h / 3.0)
