#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Oráculos de verdad y de teoría

Valores exactos de los nodos por fuerza bruta, evaluadores de las cotas
teóricas de regret y de visitas, la envolvente recursiva N_i y la
instrumentación del primer acceso a la hoja óptima en el árbol adversario.

Nada en este módulo modifica los árboles ni las trazas que recibe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .engine import RunTrace
from .environments import LeafRewardModel
from .errors import ConfigError
from .logger import get_logger
from .policies import PolicyKind, SmoothnessKind, SmoothnessSeq, smoothness_delta
from .tree import ROOT, TreeIndex

logger = get_logger('bandit_tree.analysis')

SQRT2 = math.sqrt(2.0)


class TheoremKind(str, Enum):
    THM1 = 'thm1'
    THM2 = 'thm2'
    THM2_SIMPLE = 'thm2_simple'
    THM4 = 'thm4'
    THM4_SIMPLE = 'thm4_simple'


def _level(depth: int) -> slice:
    return slice((1 << depth) - 1, (1 << (depth + 1)) - 1)


@dataclass(frozen=True)
class ValueMap:
    """
    Valores μ_i, gaps Δ_i = μ* - μ_i y profundidades de todos los nodos
    del árbol completo, en numeración de montículo.
    """

    depth_limit: int
    mu: np.ndarray
    leaf_min: np.ndarray
    depth: np.ndarray
    mu_star: float

    @property
    def gap(self) -> np.ndarray:
        return self.mu_star - self.mu

    @property
    def optimal(self) -> np.ndarray:
        return self.mu == self.mu_star

    @property
    def node_count(self) -> int:
        return len(self.mu)

    @property
    def leaf_gaps(self) -> np.ndarray:
        return self.gap[_level(self.depth_limit)]

    def eta_optimal(self, eta: float) -> np.ndarray:
        """I_η: nodos con Δ_i <= η"""
        return np.flatnonzero(self.gap <= eta)

    def eta_optimal_leaves(self, eta: float) -> np.ndarray:
        """J_η = I_η ∩ L, como índices de hoja"""
        return np.flatnonzero(self.leaf_gaps <= eta)

    def suboptimal_leaves(self) -> np.ndarray:
        """S: hojas con Δ_j > 0"""
        return np.flatnonzero(self.leaf_gaps > 0)


def brute_force_values(env: LeafRewardModel, depth: int | None = None) -> ValueMap:
    """
    Calcula μ_i de todos los nodos como el máximo de las hojas de su subárbol

    Args:
        env (LeafRewardModel): Entorno con profundidad fija
        depth (int | None): Profundidad D (por defecto la del entorno)

    Returns:
        ValueMap: Valores exactos por nodo
    """
    depth = env.depth_limit if depth is None else depth
    if depth is None or depth != env.depth_limit:
        raise ConfigError(f"Profundidad {depth} incompatible con el entorno (D={env.depth_limit})")
    node_count = (1 << (depth + 1)) - 1
    mu = np.empty(node_count, dtype=np.float64)
    leaf_min = np.empty(node_count, dtype=np.float64)
    depths = np.empty(node_count, dtype=np.int64)
    leaves = env.leaf_means()
    mu[_level(depth)] = leaves
    leaf_min[_level(depth)] = leaves
    depths[_level(depth)] = depth
    for d in range(depth - 1, -1, -1):
        below = _level(d + 1)
        mu[_level(d)] = mu[below].reshape(-1, 2).max(axis=1)
        leaf_min[_level(d)] = leaf_min[below].reshape(-1, 2).min(axis=1)
        depths[_level(d)] = d
    for array in (mu, leaf_min, depths):
        array.setflags(write=False)
    return ValueMap(depth_limit=depth, mu=mu, leaf_min=leaf_min, depth=depths, mu_star=float(mu[ROOT]))


def _visit_bound(gap, scale: float):
    """6 log(scale / gap^2) / gap^2"""
    squared = np.square(gap)
    return 6.0 * np.log(scale / squared) / squared


def theorem3_envelope(values: ValueMap, seq: SmoothnessSeq, beta: float, N: int | None = None) -> np.ndarray:
    """
    Números N_i de la envolvente recursiva de visitas de BAST

    Hoja: 6 log(4Nβ^{-1}/Δ_i^2)/Δ_i^2. Nodo interno: N_{i1} + N_{i2}, o el
    mínimo con 6 log(4Nβ^{-1}/(Δ_i - δ_d)^2)/(Δ_i - δ_d)^2 si Δ_i > δ_d.

    Returns:
        np.ndarray: N_i por nodo; NaN en los nodos óptimos (Δ_i = 0)
    """
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"β debe estar en (0, 1) (recibido: {beta})")
    D = values.depth_limit
    N = (1 << (D + 1)) - 1 if N is None else N
    scale = 4.0 * N / beta
    gap = values.gap
    envelope = np.full(values.node_count, np.nan)

    leaves = _level(D)
    leaf_gap = gap[leaves]
    suboptimal = leaf_gap > 0
    level_values = np.full(len(leaf_gap), np.nan)
    level_values[suboptimal] = _visit_bound(leaf_gap[suboptimal], scale)
    envelope[leaves] = level_values

    for d in range(D - 1, -1, -1):
        level = _level(d)
        children_sum = envelope[_level(d + 1)].reshape(-1, 2).sum(axis=1)
        node_gap = gap[level]
        delta_d = smoothness_delta(seq, d)
        level_values = np.where(node_gap > 0, children_sum, np.nan)
        direct = node_gap > delta_d
        if np.any(direct):
            level_values[direct] = np.minimum(children_sum[direct],
                                              _visit_bound(node_gap[direct] - delta_d, scale))
        envelope[level] = level_values
    return envelope


def envelope_respected(values: ValueMap, envelope: np.ndarray, visits: np.ndarray) -> bool:
    """True si n_i <= N_i en todos los nodos subóptimos"""
    suboptimal = values.gap > 0
    return bool(np.all(visits[:values.node_count][suboptimal] <= envelope[suboptimal]))


def theorem1_rhs(depth: int, n: int, log_inv_beta_n: float) -> float:
    """(1+√2)/2 [(1+√2)^D - 1] sqrt(log(β_n^{-1}) n) + (3^D - 1)/2"""
    return ((1.0 + SQRT2) / 2.0 * ((1.0 + SQRT2) ** depth - 1.0) * math.sqrt(log_inv_beta_n * n)
            + (3 ** depth - 1) / 2)


def _theorem4_tail(seq: SmoothnessSeq, eta: float, scale: float) -> float:
    c = seq.c
    return 54.0 * (3.0 * seq.delta) ** c / eta ** (2.0 + c) * math.log(scale / eta ** 2)


def theorem_bound(kind: TheoremKind | str, values: ValueMap, beta: float, n: int | None = None,
                  eta: float | None = None, seq: SmoothnessSeq | None = None) -> float:
    """
    Lado derecho de las cotas teóricas de pseudo-regret

    thm1: UCT modificado, necesita n. thm2/thm2_simple: Flat UCB.
    thm4/thm4_simple: BAST con suavidad exponencial, necesita η > 0.

    Args:
        kind (TheoremKind): Cota a evaluar
        values (ValueMap): Valores del entorno
        beta (float): Nivel de confianza
        n (int | None): Número de rondas (thm1)
        eta (float | None): Umbral η (thm4)
        seq (SmoothnessSeq | None): Suavidad exponencial (thm4)

    Returns:
        float: Valor de la cota, sin redondeo
    """
    kind = TheoremKind(kind)
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"β debe estar en (0, 1) (recibido: {beta})")
    D = values.depth_limit
    N = (1 << (D + 1)) - 1
    leaf_gaps = values.leaf_gaps
    positive = leaf_gaps[leaf_gaps > 0]

    if kind is TheoremKind.THM1:
        if n is None or n < 1:
            raise ConfigError("thm1 necesita el número de rondas n >= 1")
        return theorem1_rhs(D, n, math.log(2.0 * N * n * (n + 1) / beta))

    if kind in (TheoremKind.THM2, TheoremKind.THM2_SIMPLE):
        if len(positive) == 0:
            return 0.0
        scale = math.ldexp(1.0, D + 2) / beta
        if kind is TheoremKind.THM2:
            return float(np.sum(6.0 / positive * np.log(scale / np.square(positive))))
        smallest = float(positive.min())
        return 6.0 * math.ldexp(1.0, D) / smallest * math.log(scale / smallest ** 2)

    if eta is None or not eta > 0:
        raise ConfigError(f"{kind.value} necesita η > 0 (recibido: {eta})")
    if seq is None or seq.kind is not SmoothnessKind.EXPONENTIAL:
        raise ConfigError(f"{kind.value} necesita una suavidad exponencial δγ^d")
    scale = 4.0 * N / beta
    in_j = leaf_gaps[(leaf_gaps <= eta) & (leaf_gaps > 0)]
    tail = _theorem4_tail(seq, eta, scale)
    if kind is TheoremKind.THM4:
        return float(np.sum(6.0 / in_j * np.log(scale / np.square(in_j)))) + tail
    if len(positive) == 0:
        return tail
    smallest = float(positive.min())
    j_size = len(values.eta_optimal_leaves(eta))
    return 6.0 * j_size / smallest * math.log(scale / smallest ** 2) + tail


def lower_bound_sqrt(depth: int) -> float:
    """
    log10 de la cota inferior del primer acceso con intervalo raíz cuadrada,
    2^{2^{D-1}} / D^{2D(D-1)} (en escala logarítmica para no desbordar)
    """
    if depth < 1:
        raise ConfigError(f"La profundidad debe ser >= 1 (recibido: {depth})")
    return (2 ** (depth - 1)) * math.log10(2.0) - 2 * depth * (depth - 1) * math.log10(depth)


def smoothness_violations(values: ValueMap, seq: SmoothnessSeq, scope: str = 'all',
                          eta: float | None = None) -> list[tuple[int, float]]:
    """
    Nodos de profundidad d < D con alguna hoja más de δ_d por debajo de μ_i

    Args:
        values (ValueMap): Valores del árbol
        seq (SmoothnessSeq): Sucesión δ_d
        scope (str): 'all', 'optimal' (Δ_i = 0) o 'eta' (Δ_i <= η)
        eta (float | None): Umbral para scope='eta'

    Returns:
        list[tuple[int, float]]: (nodo, exceso μ_i - min_j μ_j - δ_d) con exceso > 0
    """
    if scope == 'all':
        candidates = np.ones(values.node_count, dtype=bool)
    elif scope == 'optimal':
        candidates = values.optimal.copy()
    elif scope == 'eta':
        if eta is None or eta < 0:
            raise ConfigError(f"scope='eta' necesita η >= 0 (recibido: {eta})")
        candidates = values.gap <= eta
    else:
        raise ConfigError(f"Ámbito desconocido: {scope!r} (opciones: all, optimal, eta)")

    violations = []
    for d in range(values.depth_limit):
        level = _level(d)
        excess = values.mu[level] - values.leaf_min[level] - smoothness_delta(seq, d)
        for offset in np.flatnonzero((excess > 0) & candidates[level]):
            violations.append((level.start + int(offset), float(excess[offset])))
    return violations


def satisfies_a_star(values: ValueMap, seq: SmoothnessSeq) -> bool:
    """En cada profundidad d < D algún nodo óptimo no tiene hojas a más de δ_d de μ*"""
    for d in range(values.depth_limit):
        level = _level(d)
        optimal = values.optimal[level]
        spread = values.mu_star - values.leaf_min[level]
        if not np.any(optimal & (spread <= smoothness_delta(seq, d))):
            return False
    return True


@dataclass(frozen=True)
class RecursionCheck:
    d: int
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs


@dataclass(frozen=True)
class FirstHitReport:
    """
    Visitas n_d del camino óptimo en la ronda del primer acceso y
    comprobación de la recursión n_{d-1} >= g(n_d) de la política
    """

    censored: bool
    budget: int
    round: int | None = None
    counts: tuple[int, ...] = ()
    checks: tuple[RecursionCheck, ...] = ()

    @property
    def recursion_holds(self) -> bool:
        return all(check.holds for check in self.checks)

    def to_dict(self) -> dict:
        return {
            'censored': self.censored,
            'budget': self.budget,
            'round': self.round,
            'counts': list(self.counts),
            'recursion_holds': self.recursion_holds if not self.censored else None,
            'checks': [{'d': c.d, 'lhs': c.lhs, 'rhs': c.rhs, 'holds': c.holds} for c in self.checks],
        }


def first_hit_analysis(trace: RunTrace) -> FirstHitReport:
    """
    Analiza el primer acceso a la hoja óptima de una ejecución sobre el
    árbol adversario

    uct_sqrt: n_{d-1} >= n_d^2 / D^4. uct_log: n_{d-1} >= exp(n_d / (2D^2)).
    Otras políticas solo registran los conteos.

    Args:
        trace (RunTrace): Traza de la ejecución

    Returns:
        FirstHitReport: Conteos y comprobaciones, o censurado si no hubo acceso
    """
    if trace.first_hit is None:
        logger.info(f"Sin acceso a la hoja óptima en {trace.rounds} rondas (censurado)")
        return FirstHitReport(censored=True, budget=trace.rounds)

    counts = trace.first_hit.path_visits
    D = trace.depth
    checks = []
    if trace.policy_kind in (PolicyKind.UCT_SQRT, PolicyKind.UCT_LOG):
        for d in range(1, D + 1):
            if trace.policy_kind is PolicyKind.UCT_SQRT:
                rhs = counts[d] ** 2 / D ** 4
            else:
                rhs = math.exp(counts[d] / (2.0 * D * D))
            checks.append(RecursionCheck(d, float(counts[d - 1]), rhs))
    report = FirstHitReport(censored=False, budget=trace.rounds, round=trace.first_hit.round,
                            counts=tuple(counts), checks=tuple(checks))
    logger.info(f"Primer acceso en la ronda {report.round}: n_d = {list(counts)}")
    return report


def check_full_tree_conservation(tree: TreeIndex, rounds: int) -> bool:
    """Raíz con n visitas y cada nodo interno con la suma de sus hijos"""
    internal = (1 << tree.depth_limit) - 1
    index = np.arange(internal)
    visits = tree.visits
    return bool(visits[ROOT] == rounds
                and np.array_equal(visits[:internal], visits[2 * index + 1] + visits[2 * index + 2]))


def check_growing_accounting(tree: TreeIndex, expansions: int) -> bool:
    """
    n_i = own_i + n_{i1} + n_{i2} en cada nodo expandido (own = 1 salvo la
    raíz, que nunca se muestrea) y 2·expansiones + 1 nodos
    """
    if tree.node_count != 2 * expansions + 1:
        return False
    used = tree.node_count
    expanded = np.flatnonzero(tree.left[:used] >= 0)
    own = np.where(expanded == ROOT, 0, 1)
    children = tree.visits[tree.left[expanded]] + tree.visits[tree.right[expanded]]
    return bool(np.array_equal(tree.visits[expanded], own + children))


@dataclass(frozen=True)
class ShapeSummary:
    max_depth: int
    deepest_node: int
    deepest_interval: tuple[float, float]
    deepest_contains_x_star: bool
    deepest_distance: float
    max_depth_inside: int
    max_depth_outside: int
    fraction_inside: float
    depth_counts: dict[int, int]

    def to_dict(self) -> dict:
        return {
            'max_depth': self.max_depth,
            'deepest_node': self.deepest_node,
            'deepest_interval': list(self.deepest_interval),
            'deepest_contains_x_star': self.deepest_contains_x_star,
            'deepest_distance': self.deepest_distance,
            'max_depth_inside': self.max_depth_inside,
            'max_depth_outside': self.max_depth_outside,
            'fraction_inside': self.fraction_inside,
            'depth_counts': {str(d): c for d, c in self.depth_counts.items()},
        }


def growing_shape_summary(tree: TreeIndex, x_star: float,
                          window: tuple[float, float] = (0.8, 1.0)) -> ShapeSummary:
    """
    Forma del árbol creciente alrededor de x*

    Un nodo está dentro de la ventana si su intervalo la corta. Los
    antepasados del nodo más profundo contienen x* si y solo si lo contiene
    su propio intervalo; entre los nodos más profundos se elige el más
    cercano a x*.
    """
    used = tree.node_count
    depths = tree.depth[:used]
    lo = np.ldexp(tree.position[:used].astype(np.float64), -depths)
    hi = np.ldexp(tree.position[:used].astype(np.float64) + 1.0, -depths)
    inside = (hi > window[0]) & (lo < window[1])

    max_depth = int(depths.max())
    deepest = [int(i) for i in np.flatnonzero(depths == max_depth)]
    distance = np.maximum(np.maximum(lo - x_star, x_star - hi), 0.0)
    deepest_node = min(deepest, key=lambda i: distance[i])
    values, counts = np.unique(depths, return_counts=True)
    return ShapeSummary(
        max_depth=max_depth,
        deepest_node=deepest_node,
        deepest_interval=(float(lo[deepest_node]), float(hi[deepest_node])),
        deepest_contains_x_star=bool(distance[deepest_node] == 0.0),
        deepest_distance=float(distance[deepest_node]),
        max_depth_inside=int(depths[inside].max()) if np.any(inside) else 0,
        max_depth_outside=int(depths[~inside].max()) if np.any(~inside) else 0,
        fraction_inside=float(np.mean(inside)),
        depth_counts={int(d): int(c) for d, c in zip(values, counts)},
    )
