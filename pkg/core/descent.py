"""
Métodos discretizados: descida de gradiente com passo certificado,
descida de gradiente natural e iteração de Kleinman–Newton
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
import scipy.linalg as la
from numpy.typing import ArrayLike

from .errors import Converged, NotOptimal, NotStabilizing
from .linalg import Matrix, lambda_max, lambda_min, norm2
from .lqr import (
    Evaluation, Plant, as_gain, closed_loop, evaluate, ray_direction_norm,
    stationarity_tol,
)
from .traces import IterationRecord, Status, Trace

logger = logging.getLogger(__name__)

MAX_ITER_GD = 100_000
MAX_ITER_NGD = 1_000
MAX_ITER_KN = 100


@dataclass(frozen=True)
class StepsizeCert:
    """Certificado de passo da descida de gradiente em K_j"""

    b: float
    c: float
    d: float
    eta: float
    eta_floor: float


@dataclass(frozen=True)
class DescentOptions:
    """
    Opções comuns aos métodos discretos

    tol None usa a tolerância de estacionariedade 1e−10·max(1, f).
    f_star, quando informado, alimenta a coluna f_gap.
    """

    tol: Optional[float] = None
    max_iter: Optional[int] = None
    f_star: Optional[float] = None
    eta: Optional[float] = None


def _eta_da_regra(d: float) -> float:
    # raiz positiva de 1 − 2dη − 3dη² = 0
    return math.sqrt(1.0 / (3.0 * d) + 1.0 / 9.0) - 1.0 / 3.0


def sublevel_delta(p: Plant, f0: float) -> float:
    """
    δ = max dos limites de b_j e c_j sobre o subnível S_{f(K₀)}
    """
    lam_r = lambda_max(p.R)
    lam_q = lambda_min(p.Q)
    lam_s = lambda_min(p.Sigma)
    nb = norm2(p.B)
    raiz = math.sqrt((lam_r + nb ** 2 * f0 / lam_s) * f0)
    b_bound = (lam_r * f0 + nb ** 2 * f0 ** 2 / lam_s + 2.0 * f0 ** 2 * nb * raiz / lam_q) / lam_q
    c_bound = (2.0 * (lam_r + nb ** 2 * f0 / lam_s) * nb * f0
               * math.sqrt(lam_r + nb ** 2 * f0 / lam_s) * f0 / lam_q) / lam_q
    return max(b_bound, c_bound)


def gd_stepsize(p: Plant, ev: Evaluation, f0: Optional[float] = None) -> StepsizeCert:
    """
    Passo certificado η_j = √(1/(3d_j) + 1/9) − 1/3

    O piso usa a mesma regra avaliada em δ, √(1/(3δ) + 1/9) − 1/3, e não
    √(1/δ + 1/9) − 1/3: assim η_j ≥ piso equivale a d_j ≤ δ.

    Args:
        p: Planta
        ev: Avaliação no iterado atual
        f0: Custo que define o subnível do piso (padrão: f(K_j))

    Returns:
        StepsizeCert com b_j, c_j, d_j, η_j e o piso do subnível

    Raises:
        Converged: N_j abaixo da tolerância de estacionariedade
    """
    if np.linalg.norm(ev.N, "fro") <= stationarity_tol(ev.f):
        raise Converged(f"gradiente nulo em f = {ev.f:.12g}")

    f = ev.f
    lam_q = lambda_min(p.Q)
    lam_s = lambda_min(p.Sigma)
    dn = ray_direction_norm(p, ev)
    b = f * lambda_max(p.R) / lam_q + 4.0 * dn * f / (lam_q * lam_s)
    c = 4.0 * lambda_min(p.R) * dn * f / (lam_q * lam_s)
    d = max(b, c)
    eta = _eta_da_regra(d)

    delta = sublevel_delta(p, f if f0 is None else f0)
    if d > delta:
        logger.warning(f"d_j = {d:.6g} acima do limite do subnível δ = {delta:.6g}")
    return StepsizeCert(b=b, c=c, d=d, eta=eta, eta_floor=_eta_da_regra(delta))


def _registro(j: int, ev: Evaluation, eta: float, f_star: Optional[float],
              stationarity: Optional[float] = None) -> IterationRecord:
    gap = ev.f - f_star if f_star is not None else math.nan
    return IterationRecord(
        iter=j, K=ev.K, X=ev.X, f=ev.f, f_gap=gap, grad_norm=ev.grad_norm,
        stationarity_norm=ev.grad_norm if stationarity is None else stationarity,
        eta=eta, abscissa=ev.abscissa, lambda_min_y=lambda_min(ev.Y),
    )


def _avaliar_inicial(p: Plant, K0: ArrayLike, nome: str) -> Evaluation:
    try:
        return evaluate(p, K0)
    except NotStabilizing:
        logger.error(f"{nome}: ganho inicial não estabilizante")
        raise


def _tolerancia(opts: DescentOptions, ev: Evaluation) -> float:
    return opts.tol if opts.tol is not None else stationarity_tol(ev.f)


def gradient_descent(p: Plant, K0: ArrayLike, opts: DescentOptions = DescentOptions()) -> Trace:
    """
    K_{j+1} = K_j − η_j∇f(K_j) com o passo certificado de gd_stepsize

    Raises:
        NotStabilizing: K0 não é estabilizante
    """
    max_iter = opts.max_iter if opts.max_iter is not None else MAX_ITER_GD
    ev = _avaliar_inicial(p, K0, "gd")
    f0 = ev.f
    registros = []
    d_valores = []
    pisos = []
    status = Status.MAX_ITER
    logger.info(f"gd: início f(K₀) = {f0:.12g}, n = {p.n}, m = {p.m}")

    for j in range(max_iter + 1):
        tol = _tolerancia(opts, ev)
        if ev.grad_norm <= tol:
            registros.append(_registro(j, ev, 0.0, opts.f_star))
            status = Status.CONVERGED
            break
        try:
            cert = gd_stepsize(p, ev, f0=f0)
        except Converged:
            registros.append(_registro(j, ev, 0.0, opts.f_star))
            status = Status.CONVERGED
            break
        registros.append(_registro(j, ev, cert.eta, opts.f_star))
        d_valores.append(cert.d)
        pisos.append(cert.eta_floor)
        if j == max_iter:
            break

        novo = evaluate(p, ev.K - cert.eta * ev.grad)
        if not novo.f < ev.f:
            logger.warning(f"gd: f não decresceu na iteração {j} ({ev.f:.17g} → {novo.f:.17g})")
        logger.debug(f"gd: j = {j}, f = {ev.f:.12g}, ‖∇f‖ = {ev.grad_norm:.3e}, η = {cert.eta:.6g}")
        ev = novo

    logger.info(f"gd: {status.value} após {len(registros) - 1} iterações, f = {ev.f:.12g}")
    meta = {
        "d_min": min(d_valores, default=math.nan),
        "d_max": max(d_valores, default=math.nan),
        "eta_floor": min(pisos, default=math.nan),
        "tau": min(r.lambda_min_y for r in registros),
    }
    return Trace(algorithm="gd", records=tuple(registros), status=status, metadata=meta)


def ngd_rate(p: Plant, mu: float, Y_star: Matrix) -> dict:
    """
    Taxa linear da descida natural

    Returns:
        {"q0": 1 − μλ₁(R)/(λₙ(Y*)λₙ(R)), "q0_printed": 1 − 4μλ₁(R)/(λₙ(Y*)λₙ(R))}
    """
    razao = mu * lambda_min(p.R) / (lambda_max(Y_star) * lambda_max(p.R))
    return {"q0": 1.0 - razao, "q0_printed": 1.0 - 4.0 * razao}


def natural_gradient_descent(p: Plant, K0: ArrayLike, opts: DescentOptions = DescentOptions()) -> Trace:
    """
    K_{j+1} = K_j − 2η N_j com η = 1/(2λₙ(R))

    Raises:
        NotStabilizing: K0 não é estabilizante
        ValueError: η fora de (0, 1/λₙ(R))
    """
    max_iter = opts.max_iter if opts.max_iter is not None else MAX_ITER_NGD
    lam_r = lambda_max(p.R)
    eta = opts.eta if opts.eta is not None else 1.0 / (2.0 * lam_r)
    if not 0.0 < eta < 1.0 / lam_r:
        raise ValueError(f"η = {eta} fora de (0, 1/λₙ(R))")

    ev = _avaliar_inicial(p, K0, "ngd")
    registros = []
    status = Status.MAX_ITER
    logger.info(f"ngd: início f(K₀) = {ev.f:.12g}, η = {eta:.6g}")

    for j in range(max_iter + 1):
        if ev.grad_norm <= _tolerancia(opts, ev):
            registros.append(_registro(j, ev, 0.0, opts.f_star))
            status = Status.CONVERGED
            break
        registros.append(_registro(j, ev, eta, opts.f_star))
        if j == max_iter:
            break
        novo = evaluate(p, ev.K - 2.0 * eta * ev.N)
        if novo.K.tobytes() == ev.K.tobytes():
            # passo abaixo da resolução de ponto flutuante
            registros[-1] = replace(registros[-1], eta=0.0)
            status = Status.CONVERGED
            break
        logger.debug(f"ngd: j = {j}, f = {ev.f:.12g}, ‖∇f‖ = {ev.grad_norm:.3e}")
        ev = novo

    logger.info(f"ngd: {status.value} após {len(registros) - 1} iterações, f = {ev.f:.12g}")
    meta = {"mu": min(r.lambda_min_y for r in registros), "eta": eta}
    return Trace(algorithm="ngd", records=tuple(registros), status=status, metadata=meta)


def kleinman_step(p: Plant, X: Matrix) -> Matrix:
    """K_{j+1} = R⁻¹BᵀX_j"""
    return la.solve(p.R, p.B.T @ X, assume_a="pos")


def kleinman_newton(p: Plant, K0: ArrayLike, opts: DescentOptions = DescentOptions()) -> Trace:
    """
    Iteração de Kleinman–Newton (quasi-Newton com η = 1/2)

    Returns:
        Trace com K* e X* terminais

    Raises:
        NotStabilizing: K0 não é estabilizante
    """
    max_iter = opts.max_iter if opts.max_iter is not None else MAX_ITER_KN
    ev = _avaliar_inicial(p, K0, "kn")
    registros = []
    status = Status.MAX_ITER
    logger.info(f"kn: início f(K₀) = {ev.f:.12g}")

    for j in range(max_iter + 1):
        if ev.grad_norm <= _tolerancia(opts, ev):
            registros.append(_registro(j, ev, 0.0, opts.f_star))
            status = Status.CONVERGED
            break
        registros.append(_registro(j, ev, 0.5, opts.f_star))
        if j == max_iter:
            break
        novo = evaluate(p, kleinman_step(p, ev.X))
        if novo.K.tobytes() == ev.K.tobytes():
            # ponto fixo numérico
            registros[-1] = replace(registros[-1], eta=0.0)
            status = Status.CONVERGED if ev.grad_norm <= stationarity_tol(ev.f) else Status.MAX_ITER
            break
        logger.debug(f"kn: j = {j}, f = {ev.f:.15g}, ‖∇f‖ = {ev.grad_norm:.3e}")
        ev = novo

    logger.info(f"kn: {status.value} após {len(registros) - 1} iterações, ‖∇f‖ = {ev.grad_norm:.3e}")
    return Trace(algorithm="kn", records=tuple(registros), status=status,
                 K_star=ev.K, X_star=ev.X, metadata={})


def optimal_evaluation(p: Plant, K0: ArrayLike, tol: float = 1e-12,
                       max_iter: Optional[int] = None) -> Evaluation:
    """
    Avaliação no ótimo global via Kleinman–Newton com ‖∇f‖_F ≤ tol·max(1, f(K₀))

    Raises:
        NotStabilizing: K0 não é estabilizante
        NotOptimal: Kleinman–Newton parou sem atingir a tolerância
    """
    ev0 = evaluate(p, K0)
    trace = kleinman_newton(p, K0, DescentOptions(tol=tol * max(1.0, ev0.f), max_iter=max_iter))
    if trace.status != Status.CONVERGED:
        logger.error(f"f*: Kleinman–Newton terminou com status {trace.status.value} "
                     f"(‖∇f‖_F = {trace.last.grad_norm:.3e})")
        raise NotOptimal(f"Kleinman–Newton não convergiu em {len(trace) - 1} iterações")
    return evaluate(p, trace.K_star)


def value_difference_residual(p: Plant, Kj: ArrayLike, Kj1: ArrayLike,
                              Xj: Optional[Matrix] = None, Xj1: Optional[Matrix] = None) -> float:
    """
    Resíduo da equação de Lyapunov satisfeita por Z = X_{j+1} − X_j

    ‖A_{K_{j+1}}ᵀZ + ZA_{K_{j+1}} + ΔᵀN_j + N_jᵀΔ + ΔᵀRΔ‖_F com Δ = K_{j+1} − K_j

    Xj e Xj1, quando informados (registros de um trace), evitam reavaliar os ganhos.

    Raises:
        NotStabilizing: algum dos ganhos não é estabilizante
    """
    Kj = as_gain(p, Kj)
    Kj1 = as_gain(p, Kj1)
    if Xj is None:
        Xj = evaluate(p, Kj).X
    if Xj1 is None:
        Xj1 = evaluate(p, Kj1).X
    Nj = p.R @ Kj - p.B.T @ Xj
    Z = Xj1 - Xj
    D = Kj1 - Kj
    A1 = closed_loop(p, Kj1)
    M = A1.T @ Z + Z @ A1 + D.T @ Nj + Nj.T @ D + D.T @ p.R @ D
    return float(np.linalg.norm(M, "fro"))


def trace_pairs(trace: Trace) -> List[tuple]:
    """Pares consecutivos (K_j, K_{j+1}) de um trace"""
    return [(a.K, b.K) for a, b in zip(trace.records, trace.records[1:])]
