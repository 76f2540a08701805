"""
Integração numérica dos fluxos de gradiente, gradiente natural e quasi-Newton
sobre o conjunto de ganhos estabilizantes
"""

import logging
import math
import re
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg as la
from numpy.typing import ArrayLike

from .errors import NotStabilizing, StepFailure
from .linalg import Matrix, sym_power
from .lqr import Evaluation, Plant, evaluate
from .traces import FlowRecord, FlowTrace, Status, fit_line

logger = logging.getLogger(__name__)

GRADIENT = "gradient"
NATURAL = "natural"
QUASI_NEWTON = "quasi_newton"

FIRST_STEP = 1e-3
MIN_STEP = 1e-12
MAX_STEPS = 200_000
MONOTONE_RTOL = 1e-12
# erro local por entrada limitado a uma fração da tolerância de parada
RESOLVE_FRAC = 1e-2
SCALE_FLOOR = 1e-15

# Dormand–Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass(frozen=True)
class FlowKind:
    """Tipo de fluxo: gradient, natural(γ) ou quasi_newton"""

    variant: str
    gamma: float = 1.0

    def __post_init__(self):
        if self.variant not in (GRADIENT, NATURAL, QUASI_NEWTON):
            raise ValueError(f"fluxo desconhecido: {self.variant}")
        if self.variant == NATURAL and not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"γ deve ser finito e positivo, recebido {self.gamma}")

    @classmethod
    def gradient(cls) -> "FlowKind":
        return cls(GRADIENT)

    @classmethod
    def natural(cls, gamma: float = 1.0) -> "FlowKind":
        return cls(NATURAL, float(gamma))

    @classmethod
    def quasi_newton(cls) -> "FlowKind":
        return cls(QUASI_NEWTON)

    @classmethod
    def parse(cls, texto: str) -> "FlowKind":
        """Aceita 'gradient', 'natural', 'natural(0.5)' e 'quasi_newton'"""
        texto = texto.strip().lower()
        m = re.fullmatch(r"natural\(\s*([^)]+)\s*\)", texto)
        if m:
            return cls.natural(float(m.group(1)))
        if texto == NATURAL:
            return cls.natural(1.0)
        return cls(texto)

    @property
    def label(self) -> str:
        return f"natural({self.gamma:g})" if self.variant == NATURAL else self.variant


def _campo(kind: FlowKind, p: Plant, ev: Evaluation) -> Matrix:
    if kind.variant == GRADIENT:
        return -ev.grad
    if kind.variant == NATURAL:
        return -2.0 * ev.N @ sym_power(ev.Y, 1.0 - kind.gamma)
    # sentido de descida: K̇ = −R⁻¹(RK − BᵀX)
    return -la.solve(p.R, ev.N, assume_a="pos")


def flow_field(kind: FlowKind, p: Plant, K: ArrayLike) -> Matrix:
    """
    Campo vetorial do fluxo em K

    Raises:
        NotStabilizing: A − BK não é Hurwitz
    """
    return _campo(kind, p, evaluate(p, K))


def _registro(t: float, ev: Evaluation, dt: float, f_star: Optional[float]) -> FlowRecord:
    gap = ev.f - f_star if f_star is not None else math.nan
    return FlowRecord(t=t, K=ev.K, X=ev.X, f=ev.f, f_gap=gap, grad_norm=ev.grad_norm,
                      dt=dt, abscissa=ev.abscissa)


def _passo_dp(kind: FlowKind, p: Plant, K: Matrix, k1: Matrix,
              h: float) -> Tuple[Matrix, Matrix, Evaluation, Matrix]:
    """Um passo de Dormand–Prince; levanta NotStabilizing se algum estágio sair da região"""
    ks = [k1]
    ev_novo = None
    for i in range(1, 7):
        Ki = K + h * sum(a * k for a, k in zip(_A[i], ks))
        ev_i = evaluate(p, Ki)
        ks.append(_campo(kind, p, ev_i))
        ev_novo = ev_i
    erro = h * sum(e * k for e, k in zip(_E, ks))
    return ev_novo.K, ks[-1], ev_novo, erro


def integrate_flow(kind: FlowKind, p: Plant, K0: ArrayLike, horizon: float, tol: float,
                   rtol: float = 1e-8, atol: float = 1e-10, first_step: float = FIRST_STEP,
                   min_step: float = MIN_STEP, max_steps: int = MAX_STEPS,
                   f_star: Optional[float] = None) -> FlowTrace:
    """
    Integra o fluxo com Runge–Kutta adaptativo 5(4) e guarda de estabilização

    Passos cujos estágios saem da região Hurwitz, ou que aumentam f além de
    arredondamento, são rejeitados e o passo é reduzido à metade.

    A escala do erro local por entrada é limitada a RESOLVE_FRAC·tol, de modo
    que a parada em ‖∇f‖_F ≤ tol seja sempre resolvível.

    Args:
        kind: Tipo de fluxo
        p: Planta
        K0: Ganho inicial estabilizante
        horizon: Horizonte finito T ≥ 0
        tol: Parada por convergência em ‖∇f‖_F ≤ tol
        rtol, atol: Tolerâncias do controle de erro
        f_star: Valor ótimo para a coluna f_gap

    Raises:
        NotStabilizing: K0 não é estabilizante
        StepFailure: passo abaixo de min_step
    """
    if horizon < 0:
        raise ValueError(f"horizonte negativo: {horizon}")
    ev = evaluate(p, K0)
    registros = [_registro(0.0, ev, 0.0, f_star)]
    logger.info(f"fluxo {kind.label}: início f = {ev.f:.12g}, horizonte {horizon:g}")

    teto = max(RESOLVE_FRAC * tol, SCALE_FLOOR)
    t = 0.0
    h = first_step
    k1 = _campo(kind, p, ev)
    status = Status.HORIZON_REACHED
    rejeitados = 0

    if ev.grad_norm <= tol:
        status = Status.CONVERGED
    while status != Status.CONVERGED and t < horizon:
        if len(registros) > max_steps:
            raise StepFailure(f"limite de {max_steps} passos atingido em t = {t:g}")
        restante = horizon - t
        if restante <= min_step:
            break
        h = min(h, restante)
        if h < min_step:
            raise StepFailure(f"passo {h:.3e} abaixo do mínimo em t = {t:g}")
        try:
            K_novo, k_novo, ev_novo, erro = _passo_dp(kind, p, ev.K, k1, h)
        except NotStabilizing:
            logger.debug(f"passo rejeitado em t = {t:g}: estágio fora da região estabilizante (h = {h:.3e})")
            rejeitados += 1
            h *= 0.5
            continue

        escala = np.minimum(atol + rtol * np.maximum(np.abs(ev.K), np.abs(K_novo)), teto)
        err = float(np.sqrt(np.mean((erro / escala) ** 2)))
        if err > 1.0:
            rejeitados += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        if ev_novo.f > ev.f + MONOTONE_RTOL * max(1.0, abs(ev.f)):
            rejeitados += 1
            h *= 0.5
            continue

        t += h
        registros.append(_registro(t, ev_novo, h, f_star))
        ev, k1 = ev_novo, k_novo
        logger.debug(f"fluxo {kind.label}: t = {t:.6g}, f = {ev.f:.12g}, ‖∇f‖ = {ev.grad_norm:.3e}")
        if ev.grad_norm <= tol:
            status = Status.CONVERGED
            break
        fator = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= fator

    logger.info(f"fluxo {kind.label}: {status.value} em t = {t:g} com {len(registros)} registros "
                f"({rejeitados} passos rejeitados)")
    return FlowTrace(kind=kind.label, records=tuple(registros), status=status,
                     metadata={"rejected_steps": rejeitados, "rtol": rtol, "atol": atol,
                               "error_scale_cap": teto})


class TrajectoryDecay(NamedTuple):
    """‖K_t − K*‖_F² ≤ c·e^{−αt}‖K₀ − K*‖_F² ao longo dos registros"""

    alpha: float
    c: float
    r2: float


def trajectory_decay(trace: FlowTrace, K_star: Matrix, floor: float = 1e-20) -> TrajectoryDecay:
    """
    Ajusta a taxa exponencial de ‖K_t − K*‖_F²

    α vem do ajuste linear de log(‖K_t − K*‖²/‖K₀ − K*‖²) contra t; c é a menor
    constante que faz a desigualdade valer em todos os registros usados.
    Pontos com erro ≤ floor ficam de fora.
    """
    t = trace.column("t")
    erro2 = np.array([float(np.sum((r.K - K_star) ** 2)) for r in trace.records])
    if erro2[0] <= floor:
        return TrajectoryDecay(math.nan, math.nan, math.nan)
    ok = erro2 > floor
    razao = np.log(erro2[ok] / erro2[0])
    ajuste = fit_line(t[ok], razao)
    alpha = -ajuste.slope
    if not math.isfinite(alpha):
        return TrajectoryDecay(math.nan, math.nan, math.nan)
    c = float(np.exp(np.max(razao + alpha * t[ok])))
    return TrajectoryDecay(alpha, c, ajuste.r2)
