"""
Plantas de benchmark: grafos, pesos de Metropolis–Hastings e presets nomeados
"""

import logging
from typing import NamedTuple, Optional

import networkx as nx
import numpy as np

from .errors import UnknownPreset
from .linalg import Matrix
from .lqr import Plant
from .structured import SparsityPattern, pattern_from_graph
from .utils import ler_arquivo_texto

logger = logging.getLogger(__name__)

PRESETS = ("path20", "lollipop10_10")


class Preset(NamedTuple):
    plant: Plant
    K0: Matrix
    pattern: Optional[SparsityPattern]
    graph: nx.Graph


def _rotular(g: nx.Graph) -> nx.Graph:
    # nós 1..n
    return nx.convert_node_labels_to_integers(g, first_label=1, ordering="sorted")


def path_graph(n: int) -> nx.Graph:
    """Caminho 1 − 2 − … − n"""
    if n < 1:
        raise ValueError(f"n deve ser ≥ 1, recebido {n}")
    return _rotular(nx.path_graph(n))


def lollipop_graph(m: int, k: int) -> nx.Graph:
    """
    Grafo completo nos nós 1..m ligado pela ponte (m, m+1) a um caminho m+1..m+k
    """
    if m < 2 or k < 1:
        raise ValueError(f"lollipop exige m ≥ 2 e k ≥ 1, recebido ({m}, {k})")
    return _rotular(nx.lollipop_graph(m, k))


def graph_from_edges(n: int, edges) -> nx.Graph:
    """
    Grafo simples com nós 1..n

    Raises:
        ValueError: laço, aresta duplicada ou extremo fora do intervalo
    """
    g = nx.Graph()
    g.add_nodes_from(range(1, n + 1))
    for i, j in edges:
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"aresta ({i}, {j}) fora de 1..{n}")
        if i == j:
            raise ValueError(f"laço no nó {i}")
        if g.has_edge(i, j):
            raise ValueError(f"aresta duplicada ({i}, {j})")
        g.add_edge(i, j)
    return g


def load_graph(caminho: str) -> nx.Graph:
    """
    Lê um grafo no formato: primeira linha "n e", depois e linhas "i j" (base 1)

    Raises:
        OSError: arquivo não pode ser lido
        ValueError: formato inválido
    """
    texto = ler_arquivo_texto(caminho)
    if texto is None:
        raise OSError(f"não foi possível ler o grafo: {caminho}")
    linhas = [l.split() for l in texto.splitlines() if l.strip()]
    if not linhas or len(linhas[0]) != 2:
        raise ValueError(f"cabeçalho 'n e' ausente em {caminho}")
    n, e = (int(v) for v in linhas[0])
    arestas = [tuple(int(v) for v in l) for l in linhas[1:]]
    if len(arestas) != e or any(len(a) != 2 for a in arestas):
        raise ValueError(f"esperadas {e} arestas 'i j' em {caminho}")
    return graph_from_edges(n, arestas)


def metropolis_hastings(g: nx.Graph) -> Matrix:
    """
    Pesos de Metropolis–Hastings: M_ij = 1/(1 + max(d_i, d_j)) nas arestas,
    M_ii = 1 − Σ_{j≠i} M_ij
    """
    nos = sorted(g.nodes())
    adj = nx.to_numpy_array(g, nodelist=nos, weight=None)
    d = adj.sum(axis=1)
    M = np.where(adj > 0, 1.0 / (1.0 + np.maximum.outer(d, d)), 0.0)
    M[np.diag_indices_from(M)] = 1.0 - M.sum(axis=1)
    return M


def plant_from_graph(g: nx.Graph) -> Plant:
    """A = MH(g) − 2I, B = Q = R = Σ = I"""
    M = metropolis_hastings(g)
    n = M.shape[0]
    I = np.eye(n)
    return Plant.create(A=M - 2.0 * I, B=I, Q=I, R=I, Sigma=I)


def preset(nome: str) -> Preset:
    """
    Presets dos experimentos numéricos

    Raises:
        UnknownPreset: nome fora de PRESETS
    """
    if nome == "path20":
        g = path_graph(20)
        padrao = None
    elif nome == "lollipop10_10":
        g = lollipop_graph(10, 10)
        padrao = pattern_from_graph(g, 20, 20)
    else:
        raise UnknownPreset(f"preset desconhecido: {nome!r} (disponíveis: {', '.join(PRESETS)})")
    p = plant_from_graph(g)
    logger.debug(f"Preset {nome}: n = {p.n}, {g.number_of_edges()} arestas")
    return Preset(plant=p, K0=np.zeros((p.m, p.n)), pattern=padrao, graph=g)
