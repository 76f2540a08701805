#!/usr/bin/env python3
"""
pglqr - Otimização de políticas para o regulador linear-quadrático em tempo contínuo
"""

import argparse
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

# Adicionar diretório do projeto ao path
PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT))

from core.errors import ConfigError, PGLQRError  # noqa: E402
from core.runner import RunSummary, run  # noqa: E402
from core.settings import (  # noqa: E402
    PREFIXO_FLUXO, RunConfig, config_from_mapping, get_defaults, load_config,
)
from core.utils import setup_logging  # noqa: E402

logger = logging.getLogger("pglqr")

EXIT_IO = 5

ALGORITMOS_DESCENT = ("gd", "ngd", "kn")

# (preset, algoritmo, amostras do relatório de certificados)
BENCH = (
    ("path20", "gd", get_defaults().samples),
    ("path20", "ngd", 0),
    ("path20", "kn", 0),
    ("path20", "flow:gradient", 0),
    ("path20", "flow:natural(1)", 0),
    ("path20", "flow:quasi_newton", 0),
    ("lollipop10_10", "pgd", 0),
)


def criar_parser() -> argparse.ArgumentParser:
    """Parser da linha de comando com os subcomandos descent, flow, pgd e bench"""
    comum = argparse.ArgumentParser(add_help=False)
    comum.add_argument("--config", help="arquivo de configuração 'chave = valor'")
    comum.add_argument("--preset", help="preset de planta (path20, lollipop10_10)")
    comum.add_argument("--out", help="diretório de saída")
    comum.add_argument("--tol", type=float, help="tolerância de parada")
    comum.add_argument("--max-iter", type=int, dest="max_iter", help="máximo de iterações")

    parser = argparse.ArgumentParser(
        prog="pglqr",
        description="Otimização de políticas para LQR em tempo contínuo",
    )
    sub = parser.add_subparsers(dest="comando", required=True)

    descent = sub.add_parser("descent", parents=[comum], help="gd, ngd ou kn")
    descent.add_argument("--algorithm", choices=ALGORITMOS_DESCENT)

    flow = sub.add_parser("flow", parents=[comum], help="integração de fluxo")
    flow.add_argument("--kind", help="gradient, natural(γ) ou quasi_newton")
    flow.add_argument("--horizon", type=float, help="horizonte de integração")

    pgd = sub.add_parser("pgd", parents=[comum], help="descida de gradiente projetada")
    pgd.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=None,
                     help="passo adaptativo 1/L_j")

    bench = sub.add_parser("bench", help="executa os presets de ponta a ponta")
    bench.add_argument("--out", default=get_defaults().out, help="diretório base de saída")
    bench.add_argument("--tol", type=float, help="tolerância de parada")
    bench.add_argument("--max-iter", type=int, dest="max_iter", help="máximo de iterações")
    bench.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=True,
                       help="passo adaptativo na descida projetada")
    bench.add_argument("--jobs", type=int, default=1, help="execuções concorrentes")
    return parser


def _algoritmo_do_comando(args: argparse.Namespace) -> Optional[str]:
    if args.comando == "descent":
        return args.algorithm
    if args.comando == "flow":
        return PREFIXO_FLUXO + args.kind if args.kind else None
    return "pgd"


def montar_config(args: argparse.Namespace) -> RunConfig:
    """
    Combina arquivo de configuração e flags; flags têm precedência

    Raises:
        ConfigError: combinação inválida ou algoritmo incompatível com o subcomando
    """
    algoritmo = _algoritmo_do_comando(args)
    if args.config:
        config = load_config(args.config, algorithm=algoritmo)
        if args.preset:
            config = config.with_overrides(preset=args.preset, matrices={})
    else:
        if not args.preset:
            raise ConfigError("informe --config ou --preset")
        config = config_from_mapping({"preset": args.preset, "algorithm": algoritmo or ""})

    config = config.with_overrides(
        out=args.out, tol=args.tol, max_iter=args.max_iter,
        horizon=getattr(args, "horizon", None), adaptive=getattr(args, "adaptive", None),
    )

    compativel = {
        "descent": config.algorithm in ALGORITMOS_DESCENT,
        "flow": config.is_flow,
        "pgd": config.algorithm == "pgd",
    }[args.comando]
    if not compativel:
        raise ConfigError(f"algoritmo {config.algorithm!r} incompatível com o subcomando {args.comando}")
    return config


def _nome_execucao(preset: str, algoritmo: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", f"{preset}-{algoritmo}").strip("_")


def configs_bench(args: argparse.Namespace) -> List[RunConfig]:
    """Uma configuração por execução do bench, cada uma com seu diretório de saída"""
    configs = []
    for nome, algoritmo, amostras in BENCH:
        config = RunConfig(
            algorithm=algoritmo, preset=nome,
            out=str(Path(args.out) / _nome_execucao(nome, algoritmo)),
            samples=amostras,
        )
        configs.append(config.with_overrides(
            tol=args.tol, max_iter=args.max_iter,
            adaptive=args.adaptive if algoritmo == "pgd" else None,
        ))
    return configs


def executar(config: RunConfig) -> int:
    """
    Executa uma configuração e traduz falhas em código de saída

    Returns:
        0 sucesso, 2 configuração, 3 estabilidade, 4 convergência, 5 E/S
    """
    try:
        summary: RunSummary = run(config)
    except PGLQRError as e:
        logger.error(f"{config.algorithm} ({config.preset or 'files'}): {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"Falha de E/S: {e}")
        return EXIT_IO
    print(f"✅ {config.algorithm} em {summary.plant}: {summary.status}, f = {summary.f:.12g}, "
          f"f − f* = {summary.f_gap:.3e}, ‖∇f‖ = {summary.grad_norm:.3e}")
    return 0


def executar_bench(args: argparse.Namespace) -> int:
    """Executa os presets, opcionalmente em paralelo; retorna o pior código de saída"""
    configs = configs_bench(args)
    jobs = max(1, args.jobs)
    logger.info(f"Bench: {len(configs)} execuções com {jobs} trabalhadores")
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        codigos = list(pool.map(executar, configs))
    for config, codigo in zip(configs, codigos):
        if codigo != 0:
            print(f"❌ {config.preset} {config.algorithm}: código {codigo}")
    return max(codigos, default=0)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Função principal da linha de comando"""
    args = criar_parser().parse_args(argv)

    setup_logging()
    logger.info(f"=== pglqr {args.comando} iniciado ===")

    if args.comando == "bench":
        return executar_bench(args)

    try:
        config = montar_config(args)
    except PGLQRError as e:
        logger.error(f"Configuração inválida: {e}")
        return e.exit_code
    return executar(config)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nExecução interrompida pelo usuário")
        sys.exit(130)
