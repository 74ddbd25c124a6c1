#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Módulo de entornos de recompensa

Define los modelos de recompensa de las hojas con su oráculo de medias
verdaderas: la función ruidosa con recompensas de Bernoulli, el árbol
adversario determinista y el entorno de tabla explícita para pruebas.

Las medias verdaderas solo las consulta la instrumentación (regret, análisis);
las políticas nunca las ven.
"""

from __future__ import annotations

import json
import math
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import EnvironmentSpecError
from .logger import get_logger
from .tree import MAX_UNBOUNDED_DEPTH

logger = get_logger('bandit_tree.environments')


class EnvironmentKind(str, Enum):
    BERNOULLI_FUNCTION = 'bernoulli_function'
    BAD_CASE = 'bad_case'
    TABLE = 'table'


def f_eval(x: float, a: float) -> float:
    """
    f(x) = max(3.6 x (1 - x), 1 - |1 - a - x| / a)

    Parábola con máximo 0.9 en x = 0.5 y pico de altura 1 en x* = 1 - a.
    """
    if not a > 0:
        raise EnvironmentSpecError(f"El parámetro a debe ser > 0 (recibido: {a})")
    if not 0.0 <= x <= 1.0:
        raise EnvironmentSpecError(f"x debe estar en [0, 1] (recibido: {x})")
    return max(3.6 * x * (1.0 - x), 1.0 - abs(1.0 - a - x) / a)


def bad_case_reward(depth_of_parent: int, action: int, depth: int) -> float:
    """
    Recompensa del árbol adversario al tomar una acción desde el nodo de la
    rama óptima de profundidad d

    La acción 2 lleva a un subárbol cuyas hojas pagan (D - d - 1)/D; en la
    profundidad D - 1 la acción 1 paga 1 y la acción 2 paga 0.

    Args:
        depth_of_parent (int): Profundidad d del nodo de la rama óptima
        action (int): 1 o 2
        depth (int): Profundidad D del árbol

    Returns:
        float: Recompensa determinista
    """
    if depth < 1:
        raise EnvironmentSpecError(f"La profundidad debe ser >= 1 (recibido: {depth})")
    if not 0 <= depth_of_parent <= depth - 1:
        raise EnvironmentSpecError(
            f"La profundidad del nodo debe estar en [0, {depth - 1}] (recibido: {depth_of_parent})")
    if action == 2:
        return (depth - depth_of_parent - 1) / depth
    if action == 1:
        if depth_of_parent == depth - 1:
            return 1.0
        raise EnvironmentSpecError(
            f"La acción 1 en profundidad {depth_of_parent} < {depth - 1} no es terminal: "
            "continúa por la rama óptima")
    raise EnvironmentSpecError(f"Acción inválida: {action} (debe ser 1 o 2)")


class LeafRewardModel:
    """
    Modelo base de recompensas con oráculo de medias

    Las subclases implementan node_reward_mean(depth, position): la
    recompensa esperada recibida al muestrear el nodo de esa profundidad y
    posición. En profundidad D es la media μ_j de la hoja j.

    Args:
        depth_limit (int | None): Profundidad D del árbol (None = sin límite)
        seed: Semilla o SeedSequence del generador de números aleatorios
    """

    kind: EnvironmentKind
    deterministic = False

    def __init__(self, depth_limit: int | None, seed=None):
        if depth_limit is not None and depth_limit < 1:
            raise EnvironmentSpecError(f"La profundidad debe ser >= 1 (recibido: {depth_limit})")
        self.depth_limit = depth_limit
        self.rng = np.random.default_rng(seed)
        self._leaf_means = None

    def reseed(self, seed) -> None:
        """Reinicia el flujo aleatorio (una ejecución, un flujo)"""
        self.rng = np.random.default_rng(seed)

    @property
    def leaf_count(self) -> int:
        self._require_depth()
        return 1 << self.depth_limit

    def _require_depth(self) -> None:
        if self.depth_limit is None:
            raise EnvironmentSpecError(
                f"El entorno {self.kind.value} no tiene profundidad fija: no hay conjunto de hojas")

    def _check_node(self, depth: int, position: int) -> None:
        limit = MAX_UNBOUNDED_DEPTH if self.depth_limit is None else self.depth_limit
        if not 0 <= depth <= limit:
            raise EnvironmentSpecError(f"Profundidad fuera de rango: {depth} (máximo {limit})")
        if not 0 <= position < (1 << depth):
            raise EnvironmentSpecError(
                f"Posición fuera de rango en profundidad {depth}: {position}")

    def node_reward_mean(self, depth: int, position: int) -> float:
        raise NotImplementedError

    def leaf_means(self) -> np.ndarray:
        """Vector de medias μ_j de todas las hojas (cacheado, solo lectura)"""
        if self._leaf_means is None:
            depth = self.depth_limit
            self._require_depth()
            means = np.array([self.node_reward_mean(depth, j) for j in range(self.leaf_count)],
                             dtype=np.float64)
            means.setflags(write=False)
            self._leaf_means = means
        return self._leaf_means

    def true_mean(self, leaf: int) -> float:
        self._check_leaf(leaf)
        return float(self.leaf_means()[leaf])

    def optimal_value(self) -> tuple[float, tuple[int, ...]]:
        """
        Returns:
            (float, tuple): μ* y el conjunto de hojas óptimas
        """
        means = self.leaf_means()
        best = float(means.max())
        return best, tuple(int(j) for j in np.flatnonzero(means == best))

    def _check_leaf(self, leaf: int) -> None:
        if not 0 <= leaf < self.leaf_count:
            raise EnvironmentSpecError(f"Hoja fuera de rango: {leaf} (hay {self.leaf_count})")

    def sample_reward(self, leaf: int) -> float:
        """Muestra la recompensa de la hoja j (un sorteo del generador)"""
        self._check_leaf(leaf)
        return self._draw(float(self.leaf_means()[leaf]))

    def sample_at(self, depth: int, position: int) -> float:
        """Muestra la recompensa de un nodo arbitrario (árbol creciente)"""
        self._check_node(depth, position)
        return self._draw(self.node_reward_mean(depth, position))

    def _draw(self, mean: float) -> float:
        if self.deterministic:
            return mean
        return 1.0 if self.rng.random() < mean else 0.0

    def describe(self) -> dict:
        return {'kind': self.kind.value, 'depth': self.depth_limit}


class BernoulliFunctionEnvironment(LeafRewardModel):
    """
    Optimización de f ruidosa en [0, 1]: cada nodo de profundidad d
    representa un intervalo de ancho 2^{-d}; muestrearlo devuelve una
    Bernoulli de parámetro f(centro del intervalo).
    """

    kind = EnvironmentKind.BERNOULLI_FUNCTION

    def __init__(self, a: float, depth_limit: int | None = None, seed=None):
        if not a > 0:
            raise EnvironmentSpecError(f"El parámetro a debe ser > 0 (recibido: {a})")
        super().__init__(depth_limit, seed)
        self.a = float(a)

    @property
    def x_star(self) -> float:
        """Maximizador global de f"""
        return 1.0 - self.a

    @property
    def lipschitz(self) -> float:
        """Cota inmediata de la constante de Lipschitz, L = 1/a"""
        return 1.0 / self.a

    def node_reward_mean(self, depth: int, position: int) -> float:
        center = math.ldexp(2 * position + 1, -(depth + 1))
        return f_eval(center, self.a)

    def describe(self) -> dict:
        return {**super().describe(), 'a': self.a}


class BadCaseEnvironment(LeafRewardModel):
    """
    Árbol adversario determinista: siempre la acción 1 paga 1; desviarse
    con la acción 2 en la profundidad d paga (D - d - 1)/D en todo el subárbol.
    """

    kind = EnvironmentKind.BAD_CASE
    deterministic = True

    def __init__(self, depth_limit: int, seed=None):
        if depth_limit is None:
            raise EnvironmentSpecError("El árbol adversario necesita una profundidad fija")
        super().__init__(depth_limit, seed)

    def node_reward_mean(self, depth: int, position: int) -> float:
        # El bit más significativo de la posición es la primera acción (0 = acción 1)
        D = self.depth_limit
        if position == 0:
            return 1.0
        first_deviation = depth - position.bit_length()
        return bad_case_reward(first_deviation, 2, D)


class TableEnvironment(LeafRewardModel):
    """
    Entorno con medias explícitas por hoja y recompensas de Bernoulli.

    Un nodo interno se muestrea como Bernoulli de su valor (el máximo de
    las medias de sus hojas).
    """

    kind = EnvironmentKind.TABLE

    def __init__(self, means, seed=None):
        means = np.asarray(means, dtype=np.float64)
        if means.ndim != 1 or len(means) < 2 or len(means) & (len(means) - 1):
            raise EnvironmentSpecError(
                f"La tabla debe tener 2^D >= 2 medias (recibido: {means.shape})")
        if np.any(~np.isfinite(means)) or np.any(means < 0.0) or np.any(means > 1.0):
            raise EnvironmentSpecError("Todas las medias de la tabla deben estar en [0, 1]")
        super().__init__(int(len(means)).bit_length() - 1, seed)
        means = means.copy()
        means.setflags(write=False)
        self._leaf_means = means

    @classmethod
    def from_json(cls, path, seed=None) -> 'TableEnvironment':
        """Carga un array JSON de 2^D medias"""
        path = Path(path)
        try:
            with open(path, 'r') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise EnvironmentSpecError(f"No se pudo leer la tabla de medias {path}: {e}") from e
        if not isinstance(data, list):
            raise EnvironmentSpecError(f"La tabla {path} debe ser un array JSON de medias")
        return cls(data, seed=seed)

    def node_reward_mean(self, depth: int, position: int) -> float:
        span = 1 << (self.depth_limit - depth)
        return float(self._leaf_means[position * span:(position + 1) * span].max())


def make_environment(spec: dict, depth: int | None, seed=None) -> LeafRewardModel:
    """
    Crea un entorno a partir de su especificación de configuración

    Args:
        spec (dict): {'kind': ..., 'a': ..., 'table_path' o 'means': ...}
        depth (int | None): Profundidad D (ignorada por 'table', que la deduce)
        seed: Semilla del generador

    Returns:
        LeafRewardModel: El entorno configurado
    """
    try:
        kind = EnvironmentKind(spec.get('kind'))
    except ValueError:
        choices = ', '.join(k.value for k in EnvironmentKind)
        raise EnvironmentSpecError(
            f"Tipo de entorno desconocido: {spec.get('kind')!r} (opciones: {choices})") from None

    if kind is EnvironmentKind.BERNOULLI_FUNCTION:
        if 'a' not in spec:
            raise EnvironmentSpecError("El entorno bernoulli_function necesita el parámetro 'a'")
        env = BernoulliFunctionEnvironment(float(spec['a']), depth_limit=depth, seed=seed)
    elif kind is EnvironmentKind.BAD_CASE:
        env = BadCaseEnvironment(depth, seed=seed)
    elif 'means' in spec:
        env = TableEnvironment(spec['means'], seed=seed)
    elif 'table_path' in spec:
        env = TableEnvironment.from_json(spec['table_path'], seed=seed)
    else:
        raise EnvironmentSpecError("El entorno table necesita 'means' o 'table_path'")

    if kind is EnvironmentKind.TABLE and depth is not None and env.depth_limit != depth:
        raise EnvironmentSpecError(
            f"La tabla tiene {env.leaf_count} hojas, incompatible con la profundidad {depth}")
    logger.debug(f"Entorno creado: {env.describe()}")
    return env
