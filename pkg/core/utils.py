"""
Funções utilitárias compartilhadas
"""

import os
import logging
from logging.handlers import RotatingFileHandler
from typing import Optional

# --- Constantes ---
LOG_LEVEL = logging.INFO
LOG_MAX_SIZE = 5 * 1024 * 1024  # 5MB
LOG_BACKUP_COUNT = 3

LOG_LEVEL_ENV = "PGLQR_LOG_LEVEL"
LOG_FILE_ENV = "PGLQR_LOG_FILE"

# Níveis aceitos em PGLQR_LOG_LEVEL
NIVEL_MAP = {
    "error": logging.ERROR,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def nivel_de_log(valor: Optional[str] = None) -> int:
    """
    Converte o nome do nível (error, info, debug) para o nível do logging

    Args:
        valor: Nome do nível; se None, lê PGLQR_LOG_LEVEL

    Returns:
        Nível numérico do módulo logging (INFO quando desconhecido)
    """
    if valor is None:
        valor = os.environ.get(LOG_LEVEL_ENV, "")
    return NIVEL_MAP.get(valor.strip().lower(), LOG_LEVEL)


def setup_logging(level: Optional[int] = None, log_path: Optional[str] = None) -> logging.Logger:
    """Configura sistema de logging com rotação"""
    if log_path is None:
        log_path = get_log_path()
    os.makedirs(os.path.dirname(os.path.abspath(log_path)), exist_ok=True)

    rotating_handler = RotatingFileHandler(
        log_path,
        maxBytes=LOG_MAX_SIZE,
        backupCount=LOG_BACKUP_COUNT
    )

    logging.basicConfig(
        level=level if level is not None else nivel_de_log(),
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[rotating_handler, logging.StreamHandler()],
        force=True,
    )

    return logging.getLogger("pglqr")


def get_log_path() -> str:
    """Retorna caminho do arquivo de log"""
    caminho = os.environ.get(LOG_FILE_ENV)
    if caminho:
        return os.path.expanduser(caminho)
    return os.path.expanduser('~/.config/pglqr/pglqr.log')


def criar_diretorio(caminho: str) -> bool:
    """Cria diretório se não existir"""
    try:
        os.makedirs(caminho, exist_ok=True)
        return True
    except OSError:
        return False


def ler_arquivo_texto(caminho: str, encoding: str = 'utf-8') -> Optional[str]:
    """Lê arquivo de texto; None quando não existe ou não pode ser lido"""
    try:
        with open(caminho, 'r', encoding=encoding) as f:
            return f.read()
    except OSError:
        return None


def escrever_arquivo_texto(caminho: str, conteudo: str, encoding: str = 'utf-8'):
    """
    Escreve arquivo de texto

    Raises:
        OSError: quando o caminho não é gravável
    """
    with open(caminho, 'w', encoding=encoding, newline='') as f:
        f.write(conteudo)
