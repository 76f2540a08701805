"""
Síntese estruturada: padrões de esparsidade, projeção ortogonal e
descida de gradiente projetada com passo de Lipschitz
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import networkx as nx
import numpy as np
from numpy.typing import ArrayLike

from .errors import EmptyPattern, NotStabilizing, OffPattern, SingularQ
from .linalg import Matrix, lambda_max, lambda_min, norm2
from .lqr import Evaluation, Plant, as_gain, evaluate, hessian_quadratic_form
from .traces import IterationRecord, Status, Trace, running_min
from .utils import ler_arquivo_texto

logger = logging.getLogger(__name__)

MAX_ITER_PGD = 100_000
PGD_TOL = 1e-6
Q_TOL = 1e-12
MONOTONE_RTOL = 1e-12


@dataclass(frozen=True)
class SparsityPattern:
    """Máscara m×n: True = entrada permitida no subespaço 𝒰"""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise ValueError(f"máscara deve ser 2D, recebida com forma {mask.shape}")
        if not mask.any():
            raise EmptyPattern("padrão sem nenhuma entrada permitida")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self):
        return self.mask.shape

    @classmethod
    def full(cls, m: int, n: int) -> "SparsityPattern":
        return cls(np.ones((m, n), dtype=bool))


@dataclass(frozen=True)
class LipschitzCert:
    a: float
    L: float
    step: float


@dataclass(frozen=True)
class PGDOptions:
    """Opções da descida projetada; adaptive usa 1/L_j da observação de passo adaptativo"""

    tol: float = PGD_TOL
    max_iter: int = MAX_ITER_PGD
    adaptive: bool = False
    f_star: Optional[float] = None


def pattern_from_graph(g: nx.Graph, m: int, n: int) -> SparsityPattern:
    """
    Padrão compatível com o grafo de comunicação (nós 1..n)

    Entrada (i, j) permitida sse i = j ou (i, j) é aresta.
    """
    if m > n:
        raise ValueError(f"m = {m} maior que n = {n}")
    mask = np.zeros((m, n), dtype=bool)
    for i in range(min(m, n)):
        mask[i, i] = True
    for u, v in g.edges():
        for i, j in ((u, v), (v, u)):
            if 1 <= i <= m and 1 <= j <= n:
                mask[i - 1, j - 1] = True
    return SparsityPattern(mask)


def load_pattern(caminho: str) -> SparsityPattern:
    """
    Lê um padrão como grade de 0/1, uma linha por linha da máscara

    Raises:
        OSError: arquivo inexistente
        ValueError: conteúdo inválido
    """
    texto = ler_arquivo_texto(caminho)
    if texto is None:
        raise OSError(f"não foi possível ler o padrão: {caminho}")
    linhas = [l.split() for l in texto.splitlines() if l.strip()]
    if not linhas or len({len(l) for l in linhas}) != 1:
        raise ValueError(f"grade de padrão irregular em {caminho}")
    if any(c not in ("0", "1") for l in linhas for c in l):
        raise ValueError(f"padrão deve conter apenas 0 e 1: {caminho}")
    return SparsityPattern(np.array([[c == "1" for c in l] for l in linhas]))


def project(K: ArrayLike, pat: SparsityPattern) -> Matrix:
    """Projeção ortogonal em 𝒰: zera exatamente as entradas fora do padrão"""
    K = np.asarray(K, dtype=float)
    if K.shape != pat.shape:
        raise ValueError(f"forma {K.shape} incompatível com o padrão {pat.shape}")
    return np.where(pat.mask, K, 0.0)


def is_canonical_input(B: Matrix) -> bool:
    """B = I ou B = [I; 0]"""
    n, m = B.shape
    return m <= n and np.array_equal(B, np.eye(n, m))


def lipschitz_bound(p: Plant, f0: float) -> LipschitzCert:
    """
    Constante de Lipschitz do gradiente sobre o subnível S_{f0}

    Raises:
        SingularQ: λ_min(Q) ≤ tolerância
        ValueError: f0 ≤ 0
    """
    if not f0 > 0:
        raise ValueError(f"f0 deve ser positivo, recebido {f0}")
    lam_q = lambda_min(p.Q)
    if lam_q <= Q_TOL:
        raise SingularQ(f"λ_min(Q) = {lam_q:.3e}")
    lam_s_min = lambda_min(p.Sigma)
    lam_s_max = lambda_max(p.Sigma)
    a = max(1.0, (f0 ** 2 / lam_s_min + lambda_max(p.B.T @ p.B) + lambda_max(p.R)) / lam_q)
    L = ((2.0 * lambda_max(p.R) + 2.0 * norm2(p.B) * a * f0 / lam_s_min)
         * f0 * lam_s_max / (lam_s_min * lam_q))
    return LipschitzCert(a=a, L=L, step=1.0 / L)


def adaptive_lipschitz(p: Plant, ev: Evaluation) -> float:
    """
    L_n = (2‖R‖ + 2‖B‖(‖X_n‖² + ‖R‖ + ‖B‖² + ‖K_nᵀRK_n‖))·Tr(X_n)·λ_max(Σ)/λ_min(Q)

    Raises:
        SingularQ: λ_min(Q) ≤ tolerância
    """
    lam_q = lambda_min(p.Q)
    if lam_q <= Q_TOL:
        raise SingularQ(f"λ_min(Q) = {lam_q:.3e}")
    nr = norm2(p.R)
    nb = norm2(p.B)
    interno = norm2(ev.X) ** 2 + nr + nb ** 2 + norm2(ev.K.T @ p.R @ ev.K)
    return float((2.0 * nr + 2.0 * nb * interno) * np.trace(ev.X) * lambda_max(p.Sigma) / lam_q)


def restricted_hessian_samples(p: Plant, ev: Evaluation, pat: SparsityPattern, count: int,
                               rng: np.random.Generator) -> np.ndarray:
    """|⟨∇²f(K)[E], E⟩| para direções aleatórias E em 𝒰 com ‖E‖_F = 1"""
    valores = []
    for _ in range(count):
        E = project(rng.standard_normal(pat.shape), pat)
        E /= np.linalg.norm(E, "fro")
        valores.append(abs(hessian_quadratic_form(p, ev.K, E, ev)))
    return np.array(valores)


def _registro(j: int, ev: Evaluation, stat: float, passo: float,
              f_star: Optional[float]) -> IterationRecord:
    gap = ev.f - f_star if f_star is not None else math.nan
    return IterationRecord(
        iter=j, K=ev.K, X=ev.X, f=ev.f, f_gap=gap, grad_norm=ev.grad_norm,
        stationarity_norm=stat, eta=passo, abscissa=ev.abscissa,
        lambda_min_y=lambda_min(ev.Y),
    )


def projected_gradient_descent(p: Plant, pat: SparsityPattern, K0: ArrayLike,
                               opts: PGDOptions = PGDOptions()) -> Trace:
    """
    K_{j+1} = K_j − t·P_𝒰(∇f(K_j)) com t = 1/L (ou 1/L_j adaptativo)

    Raises:
        OffPattern: K0 fora do padrão
        NotStabilizing: K0 não é estabilizante
    """
    K0 = as_gain(p, K0)
    if not np.array_equal(project(K0, pat), K0):
        raise OffPattern("K0 possui entradas não nulas fora do padrão")
    try:
        ev = evaluate(p, K0)
    except NotStabilizing:
        logger.error("pgd: ganho inicial não estabilizante")
        raise

    f0 = ev.f
    cert = lipschitz_bound(p, f0)
    canonico = is_canonical_input(p.B)
    if not canonico:
        logger.warning("pgd: B não canônica; garantias de estacionariedade não se estendem")
    logger.info(f"pgd: início f(K₀) = {f0:.12g}, L = {cert.L:.6g}, adaptativo = {opts.adaptive}")

    registros = []
    minimos = []
    fallbacks = 0
    status = Status.MAX_ITER
    for j in range(opts.max_iter + 1):
        G = project(ev.grad, pat)
        stat = float(np.linalg.norm(G, "fro"))
        minimos.append(stat ** 2)
        if stat <= opts.tol:
            registros.append(_registro(j, ev, stat, 0.0, opts.f_star))
            status = Status.CONVERGED
            break

        passo = cert.step
        if opts.adaptive:
            Ln = adaptive_lipschitz(p, ev)
            passo = 1.0 / Ln if Ln <= cert.L else cert.step
        registros.append(_registro(j, ev, stat, passo, opts.f_star))
        if j == opts.max_iter:
            break

        try:
            novo = evaluate(p, ev.K - passo * G)
        except NotStabilizing:
            novo = None
        if passo == cert.step:
            if novo is None:
                raise NotStabilizing(f"pgd: passo 1/L saiu da região estabilizante na iteração {j}")
        elif novo is None or novo.f > ev.f + MONOTONE_RTOL * max(1.0, ev.f):
            # passo adaptativo sem garantia; volta ao passo certificado 1/L
            logger.info(f"pgd: passo adaptativo {passo:.3e} rejeitado na iteração {j}, usando 1/L")
            fallbacks += 1
            passo = cert.step
            registros[-1] = _registro(j, ev, stat, passo, opts.f_star)
            novo = evaluate(p, ev.K - passo * G)
        logger.debug(f"pgd: j = {j}, f = {ev.f:.12g}, ‖P∇f‖ = {stat:.3e}, t = {passo:.3e}")
        ev = novo

    logger.info(f"pgd: {status.value} após {len(registros) - 1} iterações, f = {ev.f:.12g}")
    meta = {
        "L": cert.L,
        "a": cert.a,
        "canonical_B": canonico,
        "adaptive": opts.adaptive,
        "adaptive_fallbacks": fallbacks,
        "min_stationarity_sq": running_min(minimos).tolist(),
        "structured_optimum_may_differ": True,
    }
    return Trace(algorithm="pgd", records=tuple(registros), status=status, metadata=meta)
