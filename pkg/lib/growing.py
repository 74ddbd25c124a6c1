#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Árbol creciente: BAST incremental

Parte solo de la raíz. En cada etapa desciende por el árbol parcial con la
cota de BAST (intervalo c_{d,n}), expande la hoja de la frontera alcanzada
en dos hijos y recibe una recompensa por cada hijo. La memoria crece
linealmente con el número de etapas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import FirstVisitOrder, TieBreak, TieRules, derive_streams
from .environments import MAX_UNBOUNDED_DEPTH, LeafRewardModel, f_eval
from .errors import ConfigError
from .logger import get_logger
from .policies import BoundEvaluator, PolicyConfig, PolicyKind, SmoothnessKind, SmoothnessSeq, smoothness_delta
from .tree import ROOT, TreeIndex

logger = get_logger('bandit_tree.growing')


@dataclass
class GrowingRunConfig:
    """
    Configuración del árbol creciente

    Args:
        policy (PolicyConfig): Política growing_bast
        environment (LeafRewardModel): Entorno con o sin profundidad máxima
        expansions (int): Número de etapas
        seed (int): Semilla
        tie_break (TieBreak): Desempate de cotas iguales
        first_visit_order (FirstVisitOrder): Orden entre dos hijos sin visitas
    """

    policy: PolicyConfig
    environment: LeafRewardModel
    expansions: int
    seed: int = 0
    tie_break: TieBreak = TieBreak.LEFT_FIRST
    first_visit_order: FirstVisitOrder = FirstVisitOrder.ACTION1_FIRST

    def __post_init__(self):
        if self.expansions < 1:
            raise ConfigError(f"El número de etapas debe ser >= 1 (recibido: {self.expansions})")
        if self.policy.kind is not PolicyKind.GROWING_BAST:
            raise ConfigError(f"run_growing necesita la política growing_bast (recibido: {self.policy.kind.value})")
        if self.policy.depth_limit != self.environment.depth_limit:
            raise ConfigError(
                f"Profundidad del entorno ({self.environment.depth_limit}) distinta de la "
                f"de la política ({self.policy.depth_limit})")
        self.tie_break = TieBreak(self.tie_break)
        self.first_visit_order = FirstVisitOrder(self.first_visit_order)

    @property
    def tie_rules(self) -> TieRules:
        return TieRules(self.tie_break, self.first_visit_order)


@dataclass(frozen=True)
class ExpansionStep:
    """Resultado de una etapa: nodo alcanzado, recompensas recibidas y si fue terminal"""

    node: int
    rewards: tuple[float, ...]
    terminal: bool


@dataclass
class GrowingTrace:
    """
    Resultado del árbol creciente

    regret acumula μ* - x por cada recompensa recibida; pseudo_regret
    acumula μ* - (media del nodo muestreado).
    """

    seed: int
    stages: int
    expansions: int
    terminal_samples: int
    samples: int
    mu_star: float
    regret: float
    pseudo_regret: float
    bounded: bool
    tree: TreeIndex
    frontier_profile: dict[int, int] = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return self.tree.node_count

    @property
    def max_depth(self) -> int:
        return int(self.tree.depth[:self.tree.node_count].max())


def _effective_depth_limit(environment: LeafRewardModel) -> int:
    if environment.depth_limit is None:
        return MAX_UNBOUNDED_DEPTH
    return min(environment.depth_limit, MAX_UNBOUNDED_DEPTH)


def supremum(environment: LeafRewardModel) -> float:
    """μ*: máximo de las hojas, o sup f = f(x*) en un entorno sin profundidad"""
    if environment.depth_limit is not None:
        return environment.optimal_value()[0]
    x_star = getattr(environment, 'x_star', None)
    if x_star is None:
        raise ConfigError(f"El entorno {environment.kind.value} no define μ* sin profundidad fija")
    return f_eval(x_star, environment.a)


def _descend(tree: TreeIndex, tie_rules: TieRules, rng: np.random.Generator) -> list[int]:
    node = ROOT
    path = [node]
    while tree.left[node] >= 0:
        left, right = int(tree.left[node]), int(tree.right[node])
        both_unvisited = tree.visits[left] == 0 and tree.visits[right] == 0
        node = tie_rules.choose(left, right, tree.bound[left], tree.bound[right], both_unvisited, rng)
        path.append(node)
    return path


def expand_step(tree: TreeIndex, evaluator: BoundEvaluator, environment: LeafRewardModel,
                tie_rules: TieRules, rng: np.random.Generator) -> tuple[ExpansionStep, list[int]]:
    """
    Ejecuta una etapa del árbol creciente

    Cada hijo nuevo empieza con una visita y su recompensa; todos los nodos
    del camino (incluido el expandido) suman 2 visitas y ambas recompensas.
    Un nodo de la frontera en la profundidad máxima no se expande: se
    muestrea una vez y el camino suma 1 visita.

    Returns:
        (ExpansionStep, list[int]): La etapa y el camino recorrido
    """
    path = _descend(tree, tie_rules, rng)
    node = path[-1]
    depth = int(tree.depth[node])

    if depth >= _effective_depth_limit(environment):
        reward = environment.sample_at(depth, int(tree.position[node]))
        tree.accumulate(path, reward, 1)
        evaluator.refresh_path(tree, path)
        return ExpansionStep(node, (reward,), terminal=True), path

    children = tree.expand(node)
    rewards = []
    for child in children:
        reward = environment.sample_at(depth + 1, int(tree.position[child]))
        tree.visits[child] = 1
        tree.reward_sum[child] = reward
        tree.bound[child] = evaluator.node_bound(tree, child)
        rewards.append(reward)
    tree.accumulate(path, sum(rewards), 2)
    evaluator.refresh_path(tree, path)
    return ExpansionStep(node, tuple(rewards), terminal=False), path


def frontier_profile(tree: TreeIndex) -> dict[int, int]:
    """Número de nodos de la frontera por profundidad"""
    depths = tree.depth[tree.frontier()]
    values, counts = np.unique(depths, return_counts=True)
    return {int(d): int(c) for d, c in zip(values, counts)}


def run_growing(cfg: GrowingRunConfig) -> GrowingTrace:
    """
    Ejecuta cfg.expansions etapas del árbol creciente

    Args:
        cfg (GrowingRunConfig): Configuración

    Returns:
        GrowingTrace: Árbol final, perfil de la frontera y regret
    """
    environment = cfg.environment
    environment_stream, tie_stream = derive_streams(cfg.seed)
    environment.reseed(environment_stream)
    tie_rng = np.random.default_rng(tie_stream)

    tree = TreeIndex.growing(environment.depth_limit)
    evaluator = BoundEvaluator(cfg.policy)
    tie_rules = cfg.tie_rules
    mu_star = supremum(environment)
    bounded = environment.depth_limit is not None

    logger.info(f"Árbol creciente: {cfg.expansions} etapas, D={environment.depth_limit}, semilla={cfg.seed}")
    if not bounded:
        logger.debug(f"Sin profundidad fija: la frontera se muestrea al llegar a {MAX_UNBOUNDED_DEPTH}")

    expansions = terminal = samples = 0
    regret = pseudo_regret = 0.0
    for _ in range(cfg.expansions):
        step, _path = expand_step(tree, evaluator, environment, tie_rules, tie_rng)
        if step.terminal:
            terminal += 1
            sampled = [step.node]
        else:
            expansions += 1
            sampled = list(tree.children(step.node))
        for node, reward in zip(sampled, step.rewards):
            mean = environment.node_reward_mean(int(tree.depth[node]), int(tree.position[node]))
            regret += mu_star - reward
            pseudo_regret += mu_star - mean
            samples += 1

    trace = GrowingTrace(
        seed=cfg.seed,
        stages=cfg.expansions,
        expansions=expansions,
        terminal_samples=terminal,
        samples=samples,
        mu_star=mu_star,
        regret=regret,
        pseudo_regret=pseudo_regret,
        bounded=bounded,
        tree=tree,
        frontier_profile=frontier_profile(tree),
    )
    logger.info(f"Fin del árbol creciente: {trace.node_count} nodos, profundidad máxima {trace.max_depth}, "
                f"{terminal} muestras terminales")
    return trace


def theorem5_visit_bound(gap: float, d: int, seq: SmoothnessSeq, beta: float) -> float:
    """
    Cota de visitas de un nodo subóptimo del árbol creciente

    Si Δ_i > δ_d: 6 log(2^{2d+2} β^{-1} / (Δ_i - δ_d)^2) / (Δ_i - δ_d)^2.
    Si no (solo suavidad exponencial):
    (3/2)(δ/c)^c ((2+c)/Δ_i)^{c+2} log(2^{2d}(2+c)^2 / (β Δ_i^2)) 2^{-d}.

    Args:
        gap (float): Δ_i > 0
        d (int): Profundidad del nodo
        seq (SmoothnessSeq): Suavidad δ_d
        beta (float): Nivel de confianza

    Returns:
        float: Cota de n_i
    """
    if not gap > 0:
        raise ConfigError(f"La cota solo está definida para nodos subóptimos (Δ_i = {gap})")
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"β debe estar en (0, 1) (recibido: {beta})")
    delta_d = smoothness_delta(seq, d)
    if gap > delta_d:
        margin = (gap - delta_d) ** 2
        return 6.0 * math.log(math.ldexp(1.0, 2 * d + 2) / beta / margin) / margin
    if seq.kind is not SmoothnessKind.EXPONENTIAL:
        raise ConfigError(
            f"Con Δ_i <= δ_d la cota necesita suavidad exponencial (es {seq.kind.value})")
    c = seq.c
    log_term = math.log(math.ldexp((2.0 + c) ** 2, 2 * d) / (beta * gap ** 2))
    return 1.5 * (seq.delta / c) ** c * ((2.0 + c) / gap) ** (c + 2.0) * log_term * math.ldexp(1.0, -d)
