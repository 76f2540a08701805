"""
Execução de experimentos: monta a planta, despacha o algoritmo e grava
trace CSV e resumo JSON
"""

import csv
import io
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .benchmarks import load_graph, preset
from .descent import (
    DescentOptions, gd_stepsize, gradient_descent, kleinman_newton, natural_gradient_descent,
    ngd_rate, optimal_evaluation, value_difference_residual,
)
from .errors import ConfigError, Converged, ConvergenceFailure, InvalidPlant, NotStabilizing
from .flows import integrate_flow, trajectory_decay
from .linalg import Matrix, norm2, solve_lyapunov_dual
from .lqr import (
    Evaluation, Plant, are_residual, closed_loop, coercivity_lower_bound, dominance_bound,
    evaluate, exact_gap, gap_bounds, kalman_rank, ray_direction_norm, trace_y_bound,
    validate_plant, y_prime_bound, y_theta_bound,
)
from .settings import RunConfig, get_defaults
from .structured import (
    PGDOptions, SparsityPattern, load_pattern, pattern_from_graph, projected_gradient_descent,
    restricted_hessian_samples,
)
from .traces import AnyTrace, FlowTrace, Status, Trace, fit_line, fit_log_gap, quadratic_ratios
from .utils import criar_diretorio, escrever_arquivo_texto, ler_arquivo_texto

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("iter_or_t", "f", "f_gap", "grad_norm", "stationarity_norm", "eta_or_dt",
               "spectral_abscissa")
TRACE_FILE = "trace.csv"
SUMMARY_FILE = "summary.json"
GAP_FLOOR = 1e-12
HESSIAN_SAMPLES = 20


@dataclass
class RunSummary:
    """Resumo de uma execução, espelhado no JSON"""

    algorithm: str
    plant: str
    status: str
    exit_code: int
    iterations: Optional[int]
    time: Optional[float]
    f: float
    f_star: float
    f_gap: float
    grad_norm: float
    stationarity_norm: float
    eta_min: float
    eta_max: float
    certificates: Dict[str, object] = field(default_factory=dict)
    fits: Dict[str, object] = field(default_factory=dict)
    report: Dict[str, object] = field(default_factory=dict)
    trace_path: str = ""
    summary_path: str = ""

    def to_dict(self) -> dict:
        return _json_limpo(asdict(self))


def _json_limpo(valor):
    # NaN/inf não são JSON válido
    if isinstance(valor, dict):
        return {k: _json_limpo(v) for k, v in valor.items()}
    if isinstance(valor, (list, tuple)):
        return [_json_limpo(v) for v in valor]
    if isinstance(valor, (np.floating, np.integer, np.bool_)):
        valor = valor.item()
    if isinstance(valor, float) and not math.isfinite(valor):
        return None
    return valor


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace(trace: AnyTrace, caminho: str):
    """
    Grava o trace em CSV com 17 dígitos significativos

    Raises:
        OSError: caminho não gravável
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    discreto = isinstance(trace, Trace)
    for r in trace.records:
        writer.writerow([
            str(r.index) if discreto else _fmt(r.index),
            _fmt(r.f), _fmt(r.f_gap), _fmt(r.grad_norm), _fmt(r.stationarity_norm),
            _fmt(r.step), _fmt(r.abscissa),
        ])
    escrever_arquivo_texto(caminho, buffer.getvalue())
    logger.info(f"Trace gravado em: {caminho} ({len(trace.records)} registros)")


def read_trace(caminho: str) -> List[Dict[str, float]]:
    """
    Lê um trace CSV gravado por write_trace

    Raises:
        OSError: arquivo ilegível
        ValueError: cabeçalho diferente do esperado
    """
    texto = ler_arquivo_texto(caminho)
    if texto is None:
        raise OSError(f"não foi possível ler o trace: {caminho}")
    reader = csv.reader(io.StringIO(texto))
    cabecalho = next(reader, None)
    if tuple(cabecalho or ()) != CSV_COLUMNS:
        raise ValueError(f"cabeçalho inesperado em {caminho}: {cabecalho}")
    return [dict(zip(CSV_COLUMNS, (float(v) for v in linha))) for linha in reader if linha]


def write_summary(summary: RunSummary, caminho: str):
    """
    Grava o resumo em JSON

    Raises:
        OSError: caminho não gravável
    """
    texto = json.dumps(summary.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)
    escrever_arquivo_texto(caminho, texto + "\n")
    logger.info(f"Resumo gravado em: {caminho}")


def load_matrix(caminho: str) -> Matrix:
    """
    Lê uma matriz: linha "rows cols" seguida da grade em ordem de linhas

    Raises:
        InvalidPlant: arquivo ilegível ou grade incompatível
    """
    texto = ler_arquivo_texto(caminho)
    if texto is None:
        raise InvalidPlant([f"cannot read {caminho}"])
    linhas = [l.split() for l in texto.splitlines() if l.strip()]
    try:
        if not linhas or len(linhas[0]) != 2:
            raise ValueError("missing 'rows cols' header")
        linhas_m, colunas = (int(v) for v in linhas[0])
        valores = np.array([float(v) for l in linhas[1:] for v in l])
        if valores.size != linhas_m * colunas:
            raise ValueError(f"expected {linhas_m * colunas} entries, found {valores.size}")
    except ValueError as e:
        raise InvalidPlant([f"{os.path.basename(caminho)}: {e}"]) from None
    return valores.reshape(linhas_m, colunas)


def load_matrices(caminhos: Mapping[str, str]) -> Plant:
    """
    Monta e valida a planta a partir dos arquivos a, b, q, r e (opcional) sigma

    Raises:
        InvalidPlant: falha de leitura ou relatório de validação não vazio
    """
    matrizes = {k: load_matrix(v) for k, v in caminhos.items()}
    p = Plant.create(A=matrizes["a"], B=matrizes["b"], Q=matrizes["q"], R=matrizes["r"],
                     Sigma=matrizes.get("sigma"))
    relatorio = validate_plant(p)
    if relatorio:
        for item in relatorio:
            logger.error(f"Planta inválida: {item}")
        raise InvalidPlant(relatorio)
    posto = kalman_rank(p)
    logger.info(f"Planta carregada: n = {p.n}, m = {p.m}, posto de Kalman = {posto}")
    if posto < p.n:
        logger.warning(f"Par (A, B) não controlável: posto de Kalman {posto} < n = {p.n}")
    return p


def _amostrar_ganho(p: Plant, opt: Evaluation, f0: float, raio: float,
                    rng: np.random.Generator) -> Evaluation:
    # K = K* + tE no subnível S_{f0}, reduzindo t até entrar
    E = rng.standard_normal(opt.K.shape)
    E /= np.linalg.norm(E, "fro")
    t = rng.uniform(0.0, 1.0) * raio
    for _ in range(60):
        try:
            ev = evaluate(p, opt.K + t * E)
            if ev.f <= f0:
                return ev
        except NotStabilizing:
            pass
        t *= 0.5
    return opt


def _y_linha(p: Plant, ev: Evaluation, direcao: Matrix) -> Matrix:
    # derivada de Y(K − θD) em θ: A_K Y′ + Y′A_Kᵀ + BDY + YDᵀBᵀ = 0
    S = p.B @ direcao @ ev.Y
    return solve_lyapunov_dual(closed_loop(p, ev.K), S + S.T)


def property_report(p: Plant, K0: Matrix, opt: Evaluation, samples: int,
                    rng: np.random.Generator) -> Dict[str, object]:
    """
    Verifica os certificados analíticos em ganhos amostrados no subnível de K0

    Returns:
        Contagem de violações por certificado e o maior erro da identidade do gap
    """
    f0 = evaluate(p, K0).f
    raio = 2.0 * float(np.linalg.norm(K0 - opt.K, "fro")) or 1.0
    limite_tr = trace_y_bound(p, f0)
    falhas = {"coercivity": 0, "exact_gap": 0, "gap_bounds": 0, "dominance": 0, "trace_y": 0,
              "y_theta": 0, "y_prime": 0}
    erro_gap = 0.0
    for _ in range(samples):
        ev = _amostrar_ganho(p, opt, f0, raio, rng)
        gap = ev.f - opt.f
        if coercivity_lower_bound(p, ev.K) > ev.f:
            falhas["coercivity"] += 1
        desvio = abs(exact_gap(p, ev, opt.K) - gap)
        erro_gap = max(erro_gap, desvio)
        if desvio > 1e-8 * max(1.0, ev.f):
            falhas["exact_gap"] += 1
        limites = gap_bounds(p, ev, opt)
        tol = 1e-10 * max(1.0, ev.f)
        if not limites.lower - tol <= gap <= limites.upper + tol:
            falhas["gap_bounds"] += 1
        if gap > dominance_bound(p, ev, opt) + tol:
            falhas["dominance"] += 1
        if np.trace(ev.Y) > limite_tr * (1.0 + 1e-12):
            falhas["trace_y"] += 1

        # raio de descida K − θ∇f dentro do passo certificado
        try:
            cert = gd_stepsize(p, ev)
        except Converged:
            continue
        theta = rng.uniform(0.0, 1.0) * cert.eta
        try:
            ev_t = evaluate(p, ev.K - theta * ev.grad)
        except NotStabilizing:
            falhas["y_theta"] += 1
            continue
        if norm2(ev_t.Y) > y_theta_bound(p, ev.f) * (1.0 + 1e-10):
            falhas["y_theta"] += 1
        limite_y = y_prime_bound(p, ev.f, ray_direction_norm(p, ev))
        if norm2(_y_linha(p, ev_t, ev.grad)) > limite_y + 1e-10:
            falhas["y_prime"] += 1
    logger.info(f"Relatório de certificados: {samples} amostras, violações {falhas}")
    return {"samples": samples, "violations": falhas, "exact_gap_max_error": erro_gap}


def _planta(config: RunConfig) -> Tuple[Plant, Matrix, Optional[SparsityPattern], str]:
    if config.preset:
        pr = preset(config.preset)
        padrao = pr.pattern
        if config.algorithm == "pgd" and padrao is None:
            padrao = pattern_from_graph(pr.graph, pr.plant.m, pr.plant.n)
        return pr.plant, pr.K0, padrao, config.preset

    p = load_matrices(config.matrices)
    padrao = None
    if config.algorithm == "pgd":
        try:
            if config.pattern:
                padrao = load_pattern(config.pattern)
            else:
                padrao = pattern_from_graph(load_graph(config.graph), p.m, p.n)
        except (OSError, ValueError) as e:
            raise ConfigError(str(e)) from e
        if padrao.shape != (p.m, p.n):
            raise ConfigError(f"padrão {padrao.shape} incompatível com o ganho {(p.m, p.n)}")
    return p, np.zeros((p.m, p.n)), padrao, "files"


def _executar(config: RunConfig, p: Plant, K0: Matrix, padrao: Optional[SparsityPattern],
              f_star: float) -> AnyTrace:
    d = get_defaults()
    if config.is_flow:
        return integrate_flow(
            config.flow_kind, p, K0,
            horizon=config.horizon if config.horizon is not None else d.horizon,
            tol=config.tol if config.tol is not None else d.flow_tol,
            rtol=config.rtol if config.rtol is not None else d.rtol,
            atol=config.atol if config.atol is not None else d.atol,
            f_star=f_star,
        )
    if config.algorithm == "pgd":
        opts = PGDOptions(
            tol=config.tol if config.tol is not None else d.pgd_tol,
            adaptive=config.adaptive, f_star=f_star,
            **({"max_iter": config.max_iter} if config.max_iter is not None else {}),
        )
        return projected_gradient_descent(p, padrao, K0, opts)
    opts = DescentOptions(tol=config.tol, max_iter=config.max_iter, f_star=f_star)
    solver = {"gd": gradient_descent, "ngd": natural_gradient_descent, "kn": kleinman_newton}
    return solver[config.algorithm](p, K0, opts)


def _ajustes(trace: AnyTrace, opt: Evaluation) -> Dict[str, object]:
    indice = trace.column("index")
    gap = trace.column("f_gap")
    ajuste = fit_log_gap(indice, gap, GAP_FLOOR)
    fits = {"log_gap_slope": ajuste.slope, "log_gap_intercept": ajuste.intercept,
            "log_gap_r2": ajuste.r2}
    if isinstance(trace, FlowTrace):
        fits["decay_rate"] = -ajuste.slope
        decaimento = trajectory_decay(trace, opt.K)
        fits["trajectory_decay_alpha"] = decaimento.alpha
        fits["trajectory_decay_c"] = decaimento.c
        fits["trajectory_decay_r2"] = decaimento.r2
    return fits


def _certificados(trace: AnyTrace, p: Plant, opt: Evaluation,
                  padrao: Optional[SparsityPattern], seed: int) -> Dict[str, object]:
    cert: Dict[str, object] = dict(trace.metadata)
    cert.pop("min_stationarity_sq", None)
    cert["kalman_rank"] = kalman_rank(p)
    if not isinstance(trace, Trace):
        return cert

    pares = list(zip(trace.records, trace.records[1:]))
    cert["value_difference_residual_max"] = max(
        (value_difference_residual(p, a.K, b.K, a.X, b.X) for a, b in pares), default=0.0)

    if trace.algorithm == "ngd":
        cert.update(ngd_rate(p, trace.metadata["mu"], opt.Y))
        razoes = [b.f_gap / a.f_gap for a, b in pares if a.f_gap > GAP_FLOOR and b.f_gap > 0]
        cert["gap_ratio_max"] = max(razoes, default=math.nan)
    elif trace.algorithm == "kn":
        erros = [float(np.linalg.norm(r.K - opt.K, "fro")) for r in trace.records]
        razoes = quadratic_ratios(erros)
        cert["quadratic_ratios"] = razoes
        cert["quadratic_ratio_max_last3"] = max(razoes[-3:], default=math.nan)
        cert["are_residual"] = are_residual(p, trace.X_star)
    elif trace.algorithm == "pgd":
        minimos = np.asarray(trace.metadata["min_stationarity_sq"])
        k = np.arange(1, minimos.size + 1)
        ok = minimos > GAP_FLOOR
        ajuste = fit_line(np.log(k[ok]), np.log(minimos[ok])) if ok.sum() >= 2 else None
        cert["stationarity_loglog_slope"] = ajuste.slope if ajuste else math.nan
        amostras = restricted_hessian_samples(p, evaluate(p, trace.last.K), padrao,
                                              HESSIAN_SAMPLES, np.random.default_rng(seed))
        cert["restricted_hessian_max"] = float(np.max(amostras))
        cert["restricted_hessian_within_L"] = bool(np.max(amostras) <= trace.metadata["L"])
        if not cert["restricted_hessian_within_L"]:
            logger.warning(f"pgd: Hessiana restrita {np.max(amostras):.6g} acima de L = "
                           f"{trace.metadata['L']:.6g}")
    return cert


def run(config: RunConfig) -> RunSummary:
    """
    Executa uma configuração e grava trace.csv e summary.json em config.out

    Raises:
        PGLQRError: configuração, planta ou ganho inicial inválidos
        ConvergenceFailure: max_iter ou horizonte atingidos acima da tolerância
            (os artefatos já foram gravados)
        OSError: falha ao gravar os artefatos
    """
    p, K0, padrao, origem = _planta(config)
    logger.info(f"Execução: {config.algorithm} em {origem} (n = {p.n}, m = {p.m})")
    try:
        opt = optimal_evaluation(p, K0, tol=get_defaults().kn_tol)
    except NotStabilizing:
        logger.error("Ganho inicial K₀ não estabilizante")
        raise
    logger.info(f"f* = {opt.f:.15g} (Kleinman–Newton)")

    trace = _executar(config, p, K0, padrao, opt.f)
    ultimo = trace.last
    passos = [r.step for r in trace.records if r.step > 0]
    discreto = isinstance(trace, Trace)
    report = {}
    if config.samples > 0:
        report = property_report(p, K0, opt, config.samples, np.random.default_rng(config.seed))

    if not criar_diretorio(config.out):
        raise OSError(f"não foi possível criar o diretório de saída: {config.out}")
    trace_path = os.path.join(config.out, TRACE_FILE)
    summary_path = os.path.join(config.out, SUMMARY_FILE)
    convergiu = trace.status == Status.CONVERGED
    summary = RunSummary(
        algorithm=config.algorithm if discreto else f"flow:{trace.kind}",
        plant=origem,
        status=trace.status.value,
        exit_code=0 if convergiu else ConvergenceFailure.exit_code,
        iterations=len(trace.records) - 1 if discreto else None,
        time=None if discreto else ultimo.t,
        f=ultimo.f, f_star=opt.f, f_gap=ultimo.f_gap, grad_norm=ultimo.grad_norm,
        stationarity_norm=ultimo.stationarity_norm,
        eta_min=min(passos, default=math.nan), eta_max=max(passos, default=math.nan),
        certificates=_certificados(trace, p, opt, padrao, config.seed),
        fits=_ajustes(trace, opt), report=report,
        trace_path=trace_path, summary_path=summary_path,
    )
    write_trace(trace, trace_path)
    write_summary(summary, summary_path)

    if not convergiu:
        logger.error(f"{config.algorithm}: {trace.status.value} acima da tolerância "
                     f"(‖∇f‖_F = {ultimo.grad_norm:.3e})")
        raise ConvergenceFailure(f"{config.algorithm} terminou com status {trace.status.value}")
    return summary
