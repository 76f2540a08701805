"""
Registros de execução compartilhados por descent, structured e flows
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .linalg import Matrix


class Status(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    HORIZON_REACHED = "horizon_reached"


@dataclass(frozen=True)
class IterationRecord:
    """Uma iteração de um método discreto"""

    iter: int
    K: Matrix
    X: Matrix
    f: float
    f_gap: float
    grad_norm: float
    stationarity_norm: float
    eta: float
    abscissa: float
    lambda_min_y: float

    @property
    def index(self) -> float:
        return self.iter

    @property
    def step(self) -> float:
        return self.eta


@dataclass(frozen=True)
class FlowRecord:
    """Um passo aceito da integração de um fluxo; dt é o passo que levou até t"""

    t: float
    K: Matrix
    X: Matrix
    f: float
    f_gap: float
    grad_norm: float
    dt: float
    abscissa: float

    @property
    def stationarity_norm(self) -> float:
        return self.grad_norm

    @property
    def index(self) -> float:
        return self.t

    @property
    def step(self) -> float:
        return self.dt


@dataclass(frozen=True)
class Trace:
    """Sequência de iterados de um método discreto"""

    algorithm: str
    records: Tuple[IterationRecord, ...]
    status: Status
    K_star: Optional[Matrix] = None
    X_star: Optional[Matrix] = None
    metadata: Dict[str, object] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def last(self) -> IterationRecord:
        return self.records[-1]

    def column(self, nome: str) -> np.ndarray:
        return np.array([getattr(r, nome) for r in self.records], dtype=float)


@dataclass(frozen=True)
class FlowTrace:
    """Registros por tempo de uma integração de fluxo"""

    kind: str
    records: Tuple[FlowRecord, ...]
    status: Status
    metadata: Dict[str, object] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def last(self) -> FlowRecord:
        return self.records[-1]

    def column(self, nome: str) -> np.ndarray:
        return np.array([getattr(r, nome) for r in self.records], dtype=float)


AnyTrace = Union[Trace, FlowTrace]


class LinearFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def fit_line(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Ajuste por mínimos quadrados y ≈ slope·x + intercept, com R²"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return LinearFit(math.nan, math.nan, math.nan)
    slope, intercept = np.polyfit(x, y, 1)
    residuo = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(residuo ** 2) / total) if total > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2)


def fit_log_gap(index: Sequence[float], gap: Sequence[float], floor: float = 1e-12) -> LinearFit:
    """
    Ajuste linear de log(gap) contra iteração/tempo

    Pontos com gap ≤ floor ficam de fora (nível de arredondamento).
    """
    index = np.asarray(index, dtype=float)
    gap = np.asarray(gap, dtype=float)
    ok = np.isfinite(gap) & (gap > floor)
    return fit_line(index[ok], np.log(gap[ok]))


def running_min(values: Sequence[float]) -> np.ndarray:
    return np.minimum.accumulate(np.asarray(values, dtype=float))


def quadratic_ratios(errors: Sequence[float], floor: float = 1e-14) -> List[float]:
    """Razões e_{j+1}/e_j² enquanto e_j > floor"""
    e = list(errors)
    return [e[j + 1] / e[j] ** 2 for j in range(len(e) - 1) if e[j] > floor]
