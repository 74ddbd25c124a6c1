#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cotas superiores de confianza (valores B) de los algoritmos de búsqueda

Todas las funciones de este módulo son puras: dependen solo de las
estadísticas del nodo y de la configuración. Los logaritmos son naturales.

Un nodo sin visitas tiene cota +inf, lo que fuerza su primera visita. Las
cotas no se recortan a [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .errors import ConfigError, MissingChildBoundsError

SQRT2 = math.sqrt(2.0)
INF = math.inf


class PolicyKind(str, Enum):
    UCT_LOG = 'uct_log'
    UCT_SQRT = 'uct_sqrt'
    MODIFIED_UCT = 'modified_uct'
    FLAT_UCB = 'flat_ucb'
    BAST = 'bast'
    GROWING_BAST = 'growing_bast'


# Cotas que leen las visitas del padre: no se pueden cachear por nodo
PARENT_DEPENDENT = frozenset({PolicyKind.UCT_LOG, PolicyKind.UCT_SQRT})


class SmoothnessKind(str, Enum):
    EXPONENTIAL = 'exponential'
    POLYNOMIAL = 'polynomial'
    LINEAR = 'linear'
    ZERO = 'zero'
    INFINITE = 'infinite'


@dataclass(frozen=True)
class SmoothnessSeq:
    """
    Sucesión de suavidad δ_d

    exponential: δ γ^d; polynomial: δ max(d, 1)^α; linear: δ (D - d);
    zero: 0; infinite: +inf.
    """

    kind: SmoothnessKind
    delta: float = 0.0
    gamma: float = 0.5
    alpha: float = -1.0
    depth_limit: int | None = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', SmoothnessKind(self.kind))
        if math.isnan(self.delta) or self.delta < 0:
            raise ConfigError(f"δ debe ser >= 0 (recibido: {self.delta})")
        if self.kind is SmoothnessKind.EXPONENTIAL and not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"γ debe estar en (0, 1) (recibido: {self.gamma})")
        if self.kind is SmoothnessKind.POLYNOMIAL and not self.alpha < 0:
            raise ConfigError(f"α debe ser < 0 (recibido: {self.alpha})")
        if self.kind is SmoothnessKind.LINEAR and self.depth_limit is None:
            raise ConfigError("La suavidad lineal δ(D - d) necesita la profundidad D")

    @property
    def c(self) -> float:
        """Exponente c = log(2)/log(1/γ) de la suavidad exponencial"""
        if self.kind is not SmoothnessKind.EXPONENTIAL:
            raise ConfigError(f"c solo está definido para suavidad exponencial (es {self.kind.value})")
        return math.log(2.0) / math.log(1.0 / self.gamma)


@dataclass(frozen=True)
class PolicyConfig:
    """
    Fórmula de cota y sus parámetros

    Args:
        kind (PolicyKind): Algoritmo
        beta (float): Nivel de confianza β en (0, 1)
        depth_limit (int | None): Profundidad D (None solo para growing_bast)
        smoothness (SmoothnessSeq | None): Obligatoria para bast y growing_bast
    """

    kind: PolicyKind
    beta: float = 0.1
    depth_limit: int | None = None
    smoothness: SmoothnessSeq | None = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', PolicyKind(self.kind))
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"β debe estar en (0, 1) (recibido: {self.beta})")
        if self.depth_limit is None:
            if self.kind is not PolicyKind.GROWING_BAST:
                raise ConfigError(f"La política {self.kind.value} necesita la profundidad D")
        elif self.depth_limit < 1:
            raise ConfigError(f"La profundidad D debe ser >= 1 (recibido: {self.depth_limit})")
        if self.kind in (PolicyKind.BAST, PolicyKind.GROWING_BAST) and self.smoothness is None:
            raise ConfigError(f"La política {self.kind.value} necesita una sucesión de suavidad")

    @property
    def node_count(self) -> int:
        """N = 2^{D+1} - 1"""
        if self.depth_limit is None:
            raise ConfigError("Un árbol sin profundidad fija no tiene número de nodos N")
        return (1 << (self.depth_limit + 1)) - 1

    @property
    def parent_dependent(self) -> bool:
        return self.kind in PARENT_DEPENDENT


@dataclass(frozen=True, slots=True)
class NodeStats:
    """Estadísticas que leen las cotas: X_{i,n_i}, n_i, p, d y cotas de los hijos"""

    mean: float
    visits: int
    parent_visits: int = 0
    depth: int = 0
    child_bounds: tuple[float, float] | None = None


@lru_cache(maxsize=1 << 16)
def _hoeffding_width(scale: float, n: int) -> float:
    """sqrt(log(scale · n (n + 1)) / (2n)), el intervalo de confianza común"""
    return math.sqrt(math.log(scale * n * (n + 1)) / (2 * n))


def _max_child(stats: NodeStats) -> float:
    left, right = stats.child_bounds
    return left if left >= right else right


def _require_children(stats: NodeStats, cfg: PolicyConfig) -> None:
    if stats.child_bounds is None:
        raise MissingChildBoundsError(
            f"El nodo interno de profundidad {stats.depth} necesita las cotas de sus hijos "
            f"({cfg.kind.value})")


def bound_uct_log(stats: NodeStats) -> float:
    """X + sqrt(2 ln(p) / n_i); término de exploración 0 si ln(p) <= 0"""
    if stats.visits == 0:
        return INF
    exploration = 0.0
    if stats.parent_visits > 1:
        exploration = math.sqrt(2.0 * math.log(stats.parent_visits) / stats.visits)
    return stats.mean + exploration


def bound_uct_sqrt(stats: NodeStats) -> float:
    """X + sqrt(sqrt(p) / n_i)"""
    if stats.visits == 0:
        return INF
    return stats.mean + math.sqrt(math.sqrt(stats.parent_visits) / stats.visits)


def modified_uct_coeffs(d: int, depth_limit: int) -> tuple[float, float]:
    """
    Coeficientes del UCT modificado según el horizonte D - d

    Returns:
        (float, float): k_d = ((1+√2)/√2)[(1+√2)^{D-d} - 1], k'_d = (3^{D-d} - 1)/2
    """
    if not 0 <= d <= depth_limit:
        raise ConfigError(f"La profundidad debe estar en [0, {depth_limit}] (recibido: {d})")
    horizon = depth_limit - d
    k = (1.0 + SQRT2) / SQRT2 * ((1.0 + SQRT2) ** horizon - 1.0)
    k_prime = (3 ** horizon - 1) / 2
    return k, k_prime


def bound_modified_uct(stats: NodeStats, cfg: PolicyConfig) -> float:
    """X + (k_d + 1) sqrt(ln(β_n^{-1}) / (2n)) + k'_d / n con β_n = β/(2Nn(n+1))"""
    if stats.visits == 0:
        return INF
    k, k_prime = modified_uct_coeffs(stats.depth, cfg.depth_limit)
    n = stats.visits
    width = _hoeffding_width(2.0 * cfg.node_count / cfg.beta, n)
    return stats.mean + (k + 1.0) * width + k_prime / n


def bound_flat_ucb(stats: NodeStats, cfg: PolicyConfig) -> float:
    """
    UCB sobre las hojas: X + sqrt(ln(β_n^{-1})/(2n)) con β_n = β/(2^{D+1} n(n+1));
    un nodo interno toma el máximo de las cotas de sus hijos.
    """
    if stats.depth < cfg.depth_limit:
        _require_children(stats, cfg)
        return _max_child(stats)
    if stats.visits == 0:
        return INF
    scale = float(1 << (cfg.depth_limit + 1)) / cfg.beta
    return stats.mean + _hoeffding_width(scale, stats.visits)


def smoothness_delta(seq: SmoothnessSeq, d: int) -> float:
    """δ_d de la sucesión de suavidad"""
    if d < 0:
        raise ConfigError(f"La profundidad debe ser >= 0 (recibido: {d})")
    kind = seq.kind
    if kind is SmoothnessKind.ZERO:
        return 0.0
    if kind is SmoothnessKind.INFINITE or math.isinf(seq.delta):
        return INF
    if kind is SmoothnessKind.EXPONENTIAL:
        return seq.delta * seq.gamma ** d
    if kind is SmoothnessKind.POLYNOMIAL:
        # 0^α diverge con α < 0: en la raíz se usa δ
        return seq.delta * max(d, 1) ** seq.alpha
    return seq.delta * (seq.depth_limit - d)


def bast_confidence(n: int, cfg: PolicyConfig) -> float:
    """c_n = sqrt(log(2Nn(n+1)β^{-1}) / (2n))"""
    if n < 1:
        raise ConfigError("c_n solo está definido para n >= 1; un nodo sin visitas tiene cota +inf")
    return _hoeffding_width(2.0 * cfg.node_count / cfg.beta, n)


def bound_bast(stats: NodeStats, cfg: PolicyConfig) -> float:
    """
    Hoja: X + c_n. Nodo interno: min(max de las cotas de los hijos, X + δ_d + c_n)
    """
    if stats.depth < cfg.depth_limit:
        _require_children(stats, cfg)
        if stats.visits == 0:
            return INF
        own = stats.mean + smoothness_delta(cfg.smoothness, stats.depth) + bast_confidence(stats.visits, cfg)
        return min(_max_child(stats), own)
    if stats.visits == 0:
        return INF
    return stats.mean + bast_confidence(stats.visits, cfg)


def growing_confidence(d: int, n: int, beta: float) -> float:
    """c_{d,n} = sqrt(log(2^{2d+1} n(n+1) β^{-1}) / (2n)), intervalo del árbol creciente"""
    if n < 1:
        raise ConfigError("c_{d,n} solo está definido para n >= 1")
    if d < 0:
        raise ConfigError(f"La profundidad debe ser >= 0 (recibido: {d})")
    return _hoeffding_width(math.ldexp(1.0, 2 * d + 1) / beta, n)


def bound_growing_bast(stats: NodeStats, cfg: PolicyConfig) -> float:
    """
    Cota del árbol creciente con el intervalo c_{d,n}

    Un nodo de la frontera (sin hijos) por encima de la profundidad máxima
    tiene un subárbol desconocido: su cota es X + δ_d + c_{d,n}. Una hoja
    terminal (profundidad D de un entorno acotado) usa X + c_{d,n}.
    """
    if stats.visits == 0:
        return INF
    width = growing_confidence(stats.depth, stats.visits, cfg.beta)
    terminal = cfg.depth_limit is not None and stats.depth >= cfg.depth_limit
    if terminal:
        return stats.mean + width
    own = stats.mean + smoothness_delta(cfg.smoothness, stats.depth) + width
    if stats.child_bounds is None:
        return own
    return min(_max_child(stats), own)


def compute_bound(stats: NodeStats, cfg: PolicyConfig) -> float:
    """Despacha a la fórmula de cota de la política configurada"""
    kind = cfg.kind
    if kind is PolicyKind.UCT_LOG:
        return bound_uct_log(stats)
    if kind is PolicyKind.UCT_SQRT:
        return bound_uct_sqrt(stats)
    if kind is PolicyKind.MODIFIED_UCT:
        return bound_modified_uct(stats, cfg)
    if kind is PolicyKind.FLAT_UCB:
        return bound_flat_ucb(stats, cfg)
    if kind is PolicyKind.BAST:
        return bound_bast(stats, cfg)
    return bound_growing_bast(stats, cfg)


class BoundEvaluator:
    """
    Evalúa las cotas de los nodos de un TreeIndex con la política dada

    Args:
        cfg (PolicyConfig): Política
    """

    def __init__(self, cfg: PolicyConfig):
        self.cfg = cfg
        self.parent_dependent = cfg.parent_dependent

    def stats_for(self, tree, node: int, parent_visits: int | None = None) -> NodeStats:
        visits = int(tree.visits[node])
        mean = float(tree.reward_sum[node]) / visits if visits else 0.0
        if parent_visits is None:
            parent = tree.parent[node]
            parent_visits = int(tree.visits[parent]) if parent >= 0 else visits
        left = tree.left[node]
        child_bounds = None
        if left >= 0:
            child_bounds = (float(tree.bound[left]), float(tree.bound[tree.right[node]]))
        return NodeStats(mean=mean, visits=visits, parent_visits=parent_visits,
                         depth=int(tree.depth[node]), child_bounds=child_bounds)

    def node_bound(self, tree, node: int, parent_visits: int | None = None) -> float:
        return compute_bound(self.stats_for(tree, node, parent_visits), self.cfg)

    def refresh_path(self, tree, path) -> None:
        """Recalcula de abajo arriba las cotas cacheadas del camino"""
        for node in reversed(path):
            tree.bound[node] = self.node_bound(tree, node)
            tree.stale[node] = False
