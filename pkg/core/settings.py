"""
Módulo para gerenciamento de configurações de execução
"""

import configparser
import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Mapping, Optional

from .errors import ConfigError
from .flows import FlowKind
from .utils import ler_arquivo_texto

logger = logging.getLogger(__name__)

SECAO = "run"
ALGORITMOS = ("gd", "ngd", "kn", "pgd")
PREFIXO_FLUXO = "flow:"
ARQUIVOS_MATRIZ = ("a", "b", "q", "r", "sigma")
CHAVES = (
    "preset", *ARQUIVOS_MATRIZ, "graph", "pattern", "algorithm", "tol", "max_iter",
    "horizon", "rtol", "atol", "adaptive", "out", "seed", "samples",
)


@dataclass(frozen=True)
class Defaults:
    """Valores numéricos padrão das execuções"""

    flow_tol: float = 1e-8
    horizon: float = 100.0
    rtol: float = 1e-8
    atol: float = 1e-10
    pgd_tol: float = 1e-6
    kn_tol: float = 1e-12
    samples: int = 100
    seed: int = 0
    out: str = "out"


@dataclass(frozen=True)
class RunConfig:
    """
    Configuração de uma execução

    Exatamente uma fonte de planta: preset ou arquivos de matriz (a, b, q, r
    e, opcionalmente, sigma). tol None usa o padrão do algoritmo.
    """

    algorithm: str
    preset: Optional[str] = None
    matrices: Dict[str, str] = field(default_factory=dict)
    graph: Optional[str] = None
    pattern: Optional[str] = None
    tol: Optional[float] = None
    max_iter: Optional[int] = None
    horizon: Optional[float] = None
    rtol: Optional[float] = None
    atol: Optional[float] = None
    adaptive: bool = False
    out: str = Defaults.out
    seed: int = Defaults.seed
    samples: int = Defaults.samples

    @property
    def is_flow(self) -> bool:
        return self.algorithm.startswith(PREFIXO_FLUXO)

    @property
    def flow_kind(self) -> FlowKind:
        if not self.is_flow:
            raise ConfigError(f"algoritmo {self.algorithm} não é um fluxo")
        return FlowKind.parse(self.algorithm[len(PREFIXO_FLUXO):])

    def with_overrides(self, **valores: Any) -> "RunConfig":
        """Aplica valores não nulos (flags da linha de comando) e revalida"""
        novos = {k: v for k, v in valores.items() if v is not None}
        config = replace(self, **novos)
        validate_config(config)
        return config


def _converter(chave: str, valor: str, tipo: type) -> Any:
    try:
        if tipo is bool:
            return configparser.ConfigParser.BOOLEAN_STATES[valor.strip().lower()]
        return tipo(valor)
    except (KeyError, ValueError):
        raise ConfigError(f"valor inválido para '{chave}': {valor!r}") from None


def validate_config(config: RunConfig):
    """
    Valida combinações da configuração

    Raises:
        ConfigError: fonte de planta ausente ou ambígua, algoritmo desconhecido,
            valores fora do intervalo
    """
    if config.preset and config.matrices:
        raise ConfigError("informe preset OU arquivos de matriz, não ambos")
    if not config.preset:
        faltando = [k for k in ("a", "b", "q", "r") if k not in config.matrices]
        if faltando:
            raise ConfigError(f"planta sem preset e sem arquivos: {', '.join(faltando)}")
    desconhecidas = set(config.matrices) - set(ARQUIVOS_MATRIZ)
    if desconhecidas:
        raise ConfigError(f"matrizes desconhecidas: {', '.join(sorted(desconhecidas))}")

    if config.is_flow:
        try:
            config.flow_kind
        except ValueError as e:
            raise ConfigError(str(e)) from None
    elif config.algorithm not in ALGORITMOS:
        raise ConfigError(f"algoritmo desconhecido: {config.algorithm!r}")

    if config.graph and config.pattern:
        raise ConfigError("informe graph OU pattern, não ambos")
    if config.algorithm == "pgd" and not config.preset and not (config.graph or config.pattern):
        raise ConfigError("pgd com planta de arquivos exige graph ou pattern")
    if config.algorithm != "pgd" and (config.graph or config.pattern):
        logger.warning(f"graph/pattern ignorados para o algoritmo {config.algorithm}")

    for nome in ("tol", "horizon", "rtol", "atol"):
        valor = getattr(config, nome)
        if valor is not None and not (math.isfinite(valor) and valor > 0):
            raise ConfigError(f"'{nome}' deve ser positivo, recebido {valor}")
    if config.max_iter is not None and config.max_iter < 0:
        raise ConfigError(f"'max_iter' deve ser ≥ 0, recebido {config.max_iter}")
    if config.samples < 0:
        raise ConfigError(f"'samples' deve ser ≥ 0, recebido {config.samples}")
    if not config.out:
        raise ConfigError("diretório de saída vazio")


def config_from_mapping(valores: Mapping[str, str], base_dir: str = ".") -> RunConfig:
    """
    Constrói RunConfig a partir de pares chave/valor em texto

    Caminhos de arquivos relativos são resolvidos contra base_dir.

    Raises:
        ConfigError: chave desconhecida ou valor inválido
    """
    desconhecidas = set(valores) - set(CHAVES)
    if desconhecidas:
        raise ConfigError(f"chaves desconhecidas: {', '.join(sorted(desconhecidas))}")

    def caminho(v: str) -> str:
        v = os.path.expanduser(v.strip())
        return v if os.path.isabs(v) else os.path.normpath(os.path.join(base_dir, v))

    kwargs: Dict[str, Any] = {"algorithm": valores.get("algorithm", "").strip().lower()}
    if not kwargs["algorithm"]:
        raise ConfigError("chave 'algorithm' ausente")
    if valores.get("preset"):
        kwargs["preset"] = valores["preset"].strip()
    kwargs["matrices"] = {k: caminho(valores[k]) for k in ARQUIVOS_MATRIZ if valores.get(k)}
    for chave in ("graph", "pattern"):
        if valores.get(chave):
            kwargs[chave] = caminho(valores[chave])
    for chave, tipo in (("tol", float), ("horizon", float), ("rtol", float), ("atol", float),
                        ("max_iter", int), ("seed", int), ("samples", int), ("adaptive", bool)):
        if valores.get(chave):
            kwargs[chave] = _converter(chave, valores[chave], tipo)
    if valores.get("out"):
        kwargs["out"] = caminho(valores["out"])

    config = RunConfig(**kwargs)
    validate_config(config)
    return config


def load_config(caminho: str, algorithm: Optional[str] = None) -> RunConfig:
    """
    Lê um arquivo de configuração plano "chave = valor"

    Args:
        caminho: Caminho do arquivo
        algorithm: Substitui a chave 'algorithm' do arquivo quando informado

    Raises:
        ConfigError: arquivo ilegível ou inválido
    """
    texto = ler_arquivo_texto(caminho)
    if texto is None:
        raise ConfigError(f"não foi possível ler a configuração: {caminho}")

    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(f"[{SECAO}]\n{texto}", source=caminho)
    except configparser.Error as e:
        raise ConfigError(f"configuração malformada em {caminho}: {e}") from None

    valores = dict(parser[SECAO])
    if algorithm:
        valores["algorithm"] = algorithm
    config = config_from_mapping(valores, os.path.dirname(os.path.abspath(caminho)))
    logger.debug(f"Configuração carregada de: {caminho}")
    return config


# Instância global dos padrões
_defaults = None


def get_defaults() -> Defaults:
    """Obtém instância singleton dos valores padrão"""
    global _defaults
    if _defaults is None:
        _defaults = Defaults()
    return _defaults
