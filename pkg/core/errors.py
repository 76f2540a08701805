"""
Hierarquia de exceções do pglqr

Cada exceção carrega o código de saída usado pela linha de comando.
"""

from typing import List, Optional


class PGLQRError(Exception):
    """Erro base de todas as operações do pacote"""

    exit_code = 1


class ConfigError(PGLQRError):
    """Configuração de execução inválida ou incompleta"""

    exit_code = 2


class InvalidPlant(PGLQRError):
    """Planta com invariantes violados"""

    exit_code = 2

    def __init__(self, report: List[str]):
        self.report = list(report)
        super().__init__("; ".join(self.report) or "planta inválida")


class UnknownPreset(PGLQRError):
    exit_code = 2


class EmptyPattern(PGLQRError):
    exit_code = 2


class OffPattern(PGLQRError):
    """Ganho inicial com entradas fora do padrão de esparsidade"""

    exit_code = 2


class SingularQ(PGLQRError):
    """λ_min(Q) nulo: a constante `a` do certificado de Lipschitz não existe"""

    exit_code = 2


class NotHurwitz(PGLQRError):
    """Matriz com abscissa espectral fora da margem exigida"""

    exit_code = 3

    def __init__(self, message: str, abscissa: Optional[float] = None):
        self.abscissa = abscissa
        super().__init__(message)


class NotStabilizing(NotHurwitz):
    """A − BK não é Hurwitz"""


class SingularSystem(PGLQRError):
    exit_code = 3


class EigenFailure(PGLQRError):
    exit_code = 3


class NotOptimal(PGLQRError):
    """Avaliação de referência não é estacionária"""

    exit_code = 4


class StepFailure(PGLQRError):
    """Controle de passo do integrador abaixo do passo mínimo"""

    exit_code = 4


class ConvergenceFailure(PGLQRError):
    exit_code = 4


class Converged(PGLQRError):
    """Sinal de estacionariedade: o certificado de passo degenera (c = 0)"""

    exit_code = 0
