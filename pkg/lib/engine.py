#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Motor de búsqueda por trayectorias sobre un árbol completo

Cada ronda desciende desde la raíz eligiendo el hijo de mayor cota, recibe
la recompensa de la hoja alcanzada y actualiza de abajo arriba las
estadísticas y las cotas cacheadas del camino recorrido. Solo cambian las
cotas del camino, así que el trabajo por ronda es O(D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .environments import LeafRewardModel
from .errors import ConfigError
from .logger import get_logger
from .policies import BoundEvaluator, PolicyConfig, PolicyKind
from .tree import ROOT, TreeIndex, build_full_tree

logger = get_logger('bandit_tree.engine')


class TieBreak(str, Enum):
    LEFT_FIRST = 'left_first'
    RIGHT_FIRST = 'right_first'
    RANDOM = 'random'


class FirstVisitOrder(str, Enum):
    ACTION1_FIRST = 'action1_first'
    ACTION2_FIRST = 'action2_first'


@dataclass(frozen=True)
class TieRules:
    """
    Reglas de desempate: first_visit_order decide entre dos hijos sin
    visitas; tie_break decide cualquier otro empate exacto de cotas.
    """

    tie_break: TieBreak = TieBreak.LEFT_FIRST
    first_visit_order: FirstVisitOrder = FirstVisitOrder.ACTION1_FIRST

    def __post_init__(self):
        object.__setattr__(self, 'tie_break', TieBreak(self.tie_break))
        object.__setattr__(self, 'first_visit_order', FirstVisitOrder(self.first_visit_order))

    def choose(self, left: int, right: int, left_bound: float, right_bound: float,
               both_unvisited: bool, rng: np.random.Generator) -> int:
        if both_unvisited:
            return right if self.first_visit_order is FirstVisitOrder.ACTION2_FIRST else left
        if left_bound > right_bound:
            return left
        if right_bound > left_bound:
            return right
        if self.tie_break is TieBreak.LEFT_FIRST:
            return left
        if self.tie_break is TieBreak.RIGHT_FIRST:
            return right
        return left if rng.random() < 0.5 else right


def checkpoint_rounds(rounds: int, stride: int | None = None) -> list[int]:
    """
    Rondas en las que se registra la curva de regret

    Por defecto escala logarítmica: 1, 2, 5, 10, 20, 50, ... y siempre la
    última ronda. Con stride se registra cada stride rondas.
    """
    if stride is not None:
        if stride < 1:
            raise ConfigError(f"El paso de la curva debe ser >= 1 (recibido: {stride})")
        points = set(range(stride, rounds + 1, stride))
    else:
        points = set()
        scale = 1
        while scale <= rounds:
            for multiple in (1, 2, 5):
                if multiple * scale <= rounds:
                    points.add(multiple * scale)
            scale *= 10
    points.add(rounds)
    return sorted(points)


@dataclass
class RunConfig:
    """
    Configuración de una ejecución

    Args:
        policy (PolicyConfig): Fórmula de cota
        environment (LeafRewardModel): Entorno (se resiembra con seed)
        rounds (int): Número máximo de trayectorias n
        seed (int): Semilla de la ejecución
        tie_break (TieBreak): Desempate de cotas iguales
        first_visit_order (FirstVisitOrder): Orden entre dos hijos sin visitas
        checkpoint_stride (int | None): Paso fijo de la curva (None = logarítmica)
        keep_rounds (bool): Guardar hoja y recompensa de todas las rondas
        track_bound_violations (bool): Vigilar el evento μ_i > B_{i,n_i}
        stop_at_first_hit (bool): Parar al alcanzar por primera vez una hoja óptima
    """

    policy: PolicyConfig
    environment: LeafRewardModel
    rounds: int
    seed: int = 0
    tie_break: TieBreak = TieBreak.LEFT_FIRST
    first_visit_order: FirstVisitOrder = FirstVisitOrder.ACTION1_FIRST
    checkpoint_stride: int | None = None
    keep_rounds: bool = False
    track_bound_violations: bool = False
    stop_at_first_hit: bool = False

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError(f"El número de rondas debe ser >= 1 (recibido: {self.rounds})")
        if self.policy.kind is PolicyKind.GROWING_BAST:
            raise ConfigError("growing_bast se ejecuta con run_growing, no con run")
        if self.environment.depth_limit != self.policy.depth_limit:
            raise ConfigError(
                f"Profundidad del entorno ({self.environment.depth_limit}) distinta de la "
                f"de la política ({self.policy.depth_limit})")
        self.tie_break = TieBreak(self.tie_break)
        self.first_visit_order = FirstVisitOrder(self.first_visit_order)

    @property
    def tie_rules(self) -> TieRules:
        return TieRules(self.tie_break, self.first_visit_order)


@dataclass(frozen=True)
class Checkpoint:
    t: int
    leaf: int
    reward: float
    regret: float
    pseudo_regret: float


@dataclass(frozen=True)
class FirstHit:
    """Ronda del primer acceso a una hoja óptima y visitas n_d de su camino"""

    round: int
    leaf: int
    path_visits: tuple[int, ...]


@dataclass
class RunTrace:
    """
    Resultado de una ejecución

    regret es R_n = Σ_{t ∈ Sub(n)} (μ* - x_t); pseudo_regret se acumula ronda a
    ronda como Σ_t Δ_{I_t}, que coincide con
    R̄_n = Σ_j n_j Δ_j. leaves/rewards solo se guardan con keep_rounds.
    """

    policy_kind: PolicyKind
    depth: int
    seed: int
    rounds: int
    mu_star: float
    gaps: np.ndarray
    leaf_visits: np.ndarray
    regret: float
    pseudo_regret: float
    suboptimal_rounds: int
    checkpoints: list[Checkpoint] = field(default_factory=list)
    leaves: np.ndarray | None = None
    rewards: np.ndarray | None = None
    first_hit: FirstHit | None = None
    bound_violation_round: int | None = None
    tree: TreeIndex | None = None

    @property
    def regret_per_round(self) -> float:
        return self.regret / self.rounds

    @property
    def pseudo_regret_per_round(self) -> float:
        return self.pseudo_regret / self.rounds

    @property
    def node_visits(self) -> np.ndarray:
        return self.tree.visits[:self.tree.node_count]

    @property
    def censored(self) -> bool:
        """True si nunca se alcanzó una hoja óptima"""
        return self.first_hit is None

    def round_records(self):
        """Genera (t, I_t, x_t, Δ_{I_t}) de cada ronda (requiere keep_rounds)"""
        if self.leaves is None:
            raise ConfigError("La ejecución no guardó las rondas (keep_rounds=False)")
        for t, (leaf, reward) in enumerate(zip(self.leaves, self.rewards), start=1):
            yield t, int(leaf), float(reward), float(self.gaps[leaf])


def pseudo_regret_from_counts(leaf_visits: np.ndarray, gaps: np.ndarray) -> float:
    """R̄_n = Σ_j n_j Δ_j"""
    return float(np.dot(leaf_visits.astype(np.float64), gaps))


def pseudo_regret_gap_bound(trace: RunTrace, beta: float) -> float:
    """Cota de Azuma: |R_n - R̄_n| <= sqrt(|Sub(n)| ln(2/β) / 2) con probabilidad 1 - β"""
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"β debe estar en (0, 1) (recibido: {beta})")
    return math.sqrt(trace.suboptimal_rounds * math.log(2.0 / beta) / 2.0)


def derive_streams(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Flujo 0: entorno; flujo 1: desempates aleatorios"""
    environment_stream, tie_stream = np.random.SeedSequence(seed).spawn(2)
    return environment_stream, tie_stream


def descend(tree: TreeIndex, evaluator: BoundEvaluator, tie_rules: TieRules,
            rng: np.random.Generator) -> list[int]:
    """Camino desde la raíz hasta una hoja eligiendo en cada nodo el hijo de mayor cota"""
    node = ROOT
    path = [node]
    left_array, right_array, visits, bounds = tree.left, tree.right, tree.visits, tree.bound
    while left_array[node] >= 0:
        left, right = int(left_array[node]), int(right_array[node])
        both_unvisited = visits[left] == 0 and visits[right] == 0
        if evaluator.parent_dependent:
            parent_visits = int(visits[node])
            left_bound = evaluator.node_bound(tree, left, parent_visits)
            right_bound = evaluator.node_bound(tree, right, parent_visits)
        else:
            left_bound, right_bound = bounds[left], bounds[right]
        node = tie_rules.choose(left, right, left_bound, right_bound, both_unvisited, rng)
        path.append(node)
    return path


def run_trajectory(tree: TreeIndex, evaluator: BoundEvaluator, environment: LeafRewardModel,
                   tie_rules: TieRules, rng: np.random.Generator) -> tuple[list[int], int, float]:
    """
    Ejecuta una trayectoria completa

    Returns:
        (list[int], int, float): Camino, hoja alcanzada y recompensa recibida
    """
    path = descend(tree, evaluator, tie_rules, rng)
    leaf = tree.leaf_of(path[-1])
    reward = environment.sample_reward(leaf)
    tree.accumulate(path, reward, 1)
    evaluator.refresh_path(tree, path)
    return path, leaf, reward


def run(cfg: RunConfig) -> RunTrace:
    """
    Ejecuta cfg.rounds trayectorias (o hasta el primer acierto si se pide)

    Args:
        cfg (RunConfig): Configuración de la ejecución

    Returns:
        RunTrace: Regret, visitas y curva de la ejecución
    """
    policy = cfg.policy
    depth = policy.depth_limit
    environment = cfg.environment
    environment_stream, tie_stream = derive_streams(cfg.seed)
    environment.reseed(environment_stream)
    tie_rng = np.random.default_rng(tie_stream)

    tree = build_full_tree(depth)
    evaluator = BoundEvaluator(policy)
    tie_rules = cfg.tie_rules

    means = environment.leaf_means()
    mu_star, optimal_leaves = environment.optimal_value()
    gaps = mu_star - means
    optimal = np.zeros(len(means), dtype=bool)
    optimal[list(optimal_leaves)] = True

    node_values = None
    if cfg.track_bound_violations:
        from .analysis import brute_force_values
        node_values = brute_force_values(environment).mu

    checkpoints = checkpoint_rounds(cfg.rounds, cfg.checkpoint_stride)
    next_checkpoint = 0
    leaves = np.zeros(cfg.rounds, dtype=np.int64) if cfg.keep_rounds else None
    rewards = np.zeros(cfg.rounds, dtype=np.float64) if cfg.keep_rounds else None

    logger.info(f"Ejecución {policy.kind.value}: D={depth}, n={cfg.rounds}, semilla={cfg.seed}")

    regret = 0.0
    pseudo_regret = 0.0
    suboptimal_rounds = 0
    first_hit = None
    violation_round = None
    recorded = []
    t = 0
    for t in range(1, cfg.rounds + 1):
        path, leaf, reward = run_trajectory(tree, evaluator, environment, tie_rules, tie_rng)
        if optimal[leaf]:
            if first_hit is None:
                first_hit = FirstHit(t, leaf, tuple(int(tree.visits[node]) for node in path))
                logger.debug(f"Primer acceso a una hoja óptima en la ronda {t}")
        else:
            suboptimal_rounds += 1
            regret += mu_star - reward
            pseudo_regret += gaps[leaf]
        if cfg.keep_rounds:
            leaves[t - 1] = leaf
            rewards[t - 1] = reward
        if node_values is not None and violation_round is None:
            for node in path:
                if node_values[node] > tree.bound[node]:
                    violation_round = t
                    logger.debug(f"Cota violada en el nodo {node}, ronda {t}")
                    break

        stop = cfg.stop_at_first_hit and first_hit is not None
        if t == checkpoints[next_checkpoint] or stop:
            recorded.append(Checkpoint(t, leaf, reward, regret, float(pseudo_regret)))
            logger.debug(f"t={t}: R_t={regret:.6g}, R̄_t={pseudo_regret:.6g}")
            if t == checkpoints[next_checkpoint]:
                next_checkpoint += 1
        if stop:
            break

    if cfg.keep_rounds:
        leaves, rewards = leaves[:t], rewards[:t]

    leaf_visits = tree.leaf_visits()
    trace = RunTrace(
        policy_kind=policy.kind,
        depth=depth,
        seed=cfg.seed,
        rounds=t,
        mu_star=mu_star,
        gaps=gaps,
        leaf_visits=leaf_visits,
        regret=regret,
        pseudo_regret=float(pseudo_regret),
        suboptimal_rounds=suboptimal_rounds,
        checkpoints=recorded,
        leaves=leaves,
        rewards=rewards,
        first_hit=first_hit,
        bound_violation_round=violation_round,
        tree=tree,
    )
    logger.info(f"Fin de la ejecución: R_n/n={trace.regret_per_round:.6g}, "
                f"R̄_n/n={trace.pseudo_regret_per_round:.6g}, |Sub(n)|={suboptimal_rounds}")
    return trace
