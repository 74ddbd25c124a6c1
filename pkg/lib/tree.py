#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Almacenamiento indexado (arena) de árboles binarios con estadísticas de visita

El árbol completo de profundidad D usa numeración de montículo: la raíz es el
nodo 0 y los hijos del nodo i son 2i+1 (acción 1, izquierda) y 2i+2 (acción 2,
derecha). La hoja j (de izquierda a derecha) es el nodo 2^D - 1 + j.

El árbol creciente usa la misma arena: los nodos se añaden al expandir y los
hijos se enlazan explícitamente.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPathError, RewardRangeError, TreeConstructionError
from .logger import get_logger

logger = get_logger('bandit_tree.tree')

ROOT = 0
NO_NODE = -1

# Profundidad máxima de un nodo del árbol creciente sin límite: por debajo
# los centros de los intervalos dejan de ser representables en float64
MAX_UNBOUNDED_DEPTH = 52

# Capacidad inicial de la arena del árbol creciente (se duplica al llenarse)
_INITIAL_CAPACITY = 64


@dataclass(frozen=True, slots=True)
class NodeRecord:
    """Vista de solo lectura de un nodo de la arena"""

    node: int
    depth: int
    position: int
    visits: int
    reward_sum: float
    cached_bound: float
    children: tuple[int, int] | None
    parent: int | None

    @property
    def mean(self) -> float | None:
        """Media empírica X_{i,n_i}, o None si el nodo no se ha visitado"""
        if self.visits == 0:
            return None
        return self.reward_sum / self.visits


class TreeIndex:
    """
    Arena de nodos binarios con contadores de visitas, suma de recompensas
    y cota cacheada B por nodo.

    Args:
        depth_limit (int | None): Profundidad máxima D (None = sin límite)
        capacity (int): Número de nodos reservados inicialmente
    """

    def __init__(self, depth_limit: int | None, capacity: int = _INITIAL_CAPACITY):
        self.depth_limit = depth_limit
        self.node_count = 0
        self.full = False
        self._allocate(max(int(capacity), 1))

    def _allocate(self, capacity: int) -> None:
        self.depth = np.zeros(capacity, dtype=np.int64)
        self.position = np.zeros(capacity, dtype=np.int64)
        self.visits = np.zeros(capacity, dtype=np.int64)
        self.reward_sum = np.zeros(capacity, dtype=np.float64)
        self.bound = np.full(capacity, np.inf, dtype=np.float64)
        self.stale = np.zeros(capacity, dtype=bool)
        self.left = np.full(capacity, NO_NODE, dtype=np.int64)
        self.right = np.full(capacity, NO_NODE, dtype=np.int64)
        self.parent = np.full(capacity, NO_NODE, dtype=np.int64)

    @property
    def capacity(self) -> int:
        return len(self.depth)

    def _grow(self) -> None:
        """Duplica la capacidad de la arena conservando el contenido"""
        old = self.capacity
        new = old * 2
        for name, fill in (('depth', 0), ('position', 0), ('visits', 0),
                           ('reward_sum', 0.0), ('bound', np.inf), ('stale', False),
                           ('left', NO_NODE), ('right', NO_NODE), ('parent', NO_NODE)):
            array = getattr(self, name)
            grown = np.full(new, fill, dtype=array.dtype)
            grown[:old] = array
            setattr(self, name, grown)

    # ------------------------------------------------------------------
    # Construcción
    # ------------------------------------------------------------------

    @classmethod
    def growing(cls, depth_limit: int | None = None) -> 'TreeIndex':
        """Árbol creciente que contiene solo la raíz"""
        if depth_limit is not None and depth_limit < 1:
            raise TreeConstructionError(
                f"La profundidad máxima del árbol creciente debe ser >= 1 (recibido: {depth_limit})")
        tree = cls(depth_limit)
        tree.add_node(depth=0, position=0, parent=NO_NODE)
        return tree

    def add_node(self, depth: int, position: int, parent: int) -> int:
        """Añade un nodo sin visitas (cota +inf) y devuelve su índice"""
        if self.node_count == self.capacity:
            self._grow()
        node = self.node_count
        self.depth[node] = depth
        self.position[node] = position
        self.parent[node] = parent
        self.node_count += 1
        return node

    def expand(self, node: int) -> tuple[int, int]:
        """
        Convierte una hoja de la frontera en nodo interno con dos hijos

        Returns:
            (int, int): Índices de los hijos (acción 1, acción 2)
        """
        if self.left[node] != NO_NODE:
            raise InvalidPathError(f"El nodo {node} ya está expandido")
        depth = int(self.depth[node]) + 1
        limit = MAX_UNBOUNDED_DEPTH if self.depth_limit is None else min(self.depth_limit, MAX_UNBOUNDED_DEPTH)
        if depth > limit:
            raise InvalidPathError(
                f"No se puede expandir el nodo {node}: superaría la profundidad {limit}")
        position = int(self.position[node])
        left = self.add_node(depth, 2 * position, node)
        right = self.add_node(depth, 2 * position + 1, node)
        self.left[node] = left
        self.right[node] = right
        return left, right

    # ------------------------------------------------------------------
    # Consultas
    # ------------------------------------------------------------------

    def children(self, node: int) -> tuple[int, int] | None:
        left = int(self.left[node])
        if left == NO_NODE:
            return None
        return left, int(self.right[node])

    def is_leaf(self, node: int) -> bool:
        return self.left[node] == NO_NODE

    def mean(self, node: int) -> float | None:
        visits = self.visits[node]
        if visits == 0:
            return None
        return float(self.reward_sum[node] / visits)

    def record(self, node: int) -> NodeRecord:
        if not 0 <= node < self.node_count:
            raise InvalidPathError(f"Nodo fuera de rango: {node}")
        parent = int(self.parent[node])
        return NodeRecord(
            node=node,
            depth=int(self.depth[node]),
            position=int(self.position[node]),
            visits=int(self.visits[node]),
            reward_sum=float(self.reward_sum[node]),
            cached_bound=float(self.bound[node]),
            children=self.children(node),
            parent=None if parent == NO_NODE else parent,
        )

    def path_to(self, node: int) -> list[int]:
        """Camino raíz -> nodo siguiendo los punteros al padre"""
        path = [node]
        while self.parent[path[-1]] != NO_NODE:
            path.append(int(self.parent[path[-1]]))
        path.reverse()
        return path

    def interval(self, node: int) -> tuple[float, float]:
        """Intervalo [lo, hi) de [0, 1] que representa el nodo"""
        depth = int(self.depth[node])
        position = int(self.position[node])
        return math.ldexp(position, -depth), math.ldexp(position + 1, -depth)

    def frontier(self) -> np.ndarray:
        """Índices de los nodos sin hijos"""
        used = slice(0, self.node_count)
        return np.flatnonzero(self.left[used] == NO_NODE)

    # Consultas específicas del árbol completo

    def _require_full(self) -> None:
        if not self.full:
            raise InvalidPathError("Operación solo disponible en árboles completos")

    @property
    def leaf_count(self) -> int:
        self._require_full()
        return 1 << self.depth_limit

    @property
    def first_leaf(self) -> int:
        self._require_full()
        return (1 << self.depth_limit) - 1

    def leaf_node(self, leaf: int) -> int:
        """Nodo de la arena correspondiente a la hoja j"""
        if not 0 <= leaf < self.leaf_count:
            raise InvalidPathError(f"Hoja fuera de rango: {leaf} (hay {self.leaf_count})")
        return self.first_leaf + leaf

    def leaf_of(self, node: int) -> int:
        """Índice de hoja j de un nodo hoja del árbol completo"""
        leaf = node - self.first_leaf
        if not 0 <= leaf < self.leaf_count:
            raise InvalidPathError(f"El nodo {node} no es una hoja")
        return leaf

    def leaf_visits(self) -> np.ndarray:
        """Vector n_j de visitas por hoja, en orden de izquierda a derecha"""
        start = self.first_leaf
        return self.visits[start:start + self.leaf_count].copy()

    # ------------------------------------------------------------------
    # Actualización
    # ------------------------------------------------------------------

    def validate_path(self, path) -> None:
        """Comprueba que el camino empieza en la raíz, es conexo y acaba en una hoja"""
        if len(path) == 0 or path[0] != ROOT:
            raise InvalidPathError("La trayectoria debe empezar en la raíz")
        for previous, current in zip(path, path[1:]):
            if not 0 <= current < self.node_count or self.parent[current] != previous:
                raise InvalidPathError(
                    f"Trayectoria desconectada: {current} no es hijo de {previous}")
        if not self.is_leaf(path[-1]):
            raise InvalidPathError(f"La trayectoria termina en el nodo interno {path[-1]}")

    def record_visit(self, path, reward: float) -> None:
        """
        Registra una trayectoria raíz -> hoja con su recompensa

        Incrementa n_i y suma la recompensa en todos los nodos del camino y
        marca sus cotas como obsoletas.

        Args:
            path (list[int]): Nodos desde la raíz hasta la hoja
            reward (float): Recompensa recibida, en [0, 1]
        """
        check_reward(reward)
        self.validate_path(path)
        self.accumulate(path, reward, 1)

    def accumulate(self, path, reward_total: float, count: int) -> None:
        """Suma count visitas y reward_total a cada nodo de path (sin validar)"""
        for node in path:
            self.visits[node] += count
            self.reward_sum[node] += reward_total
            self.stale[node] = True

    def copy(self) -> 'TreeIndex':
        clone = TreeIndex.__new__(TreeIndex)
        clone.depth_limit = self.depth_limit
        clone.node_count = self.node_count
        clone.full = self.full
        for name in ('depth', 'position', 'visits', 'reward_sum', 'bound',
                     'stale', 'left', 'right', 'parent'):
            setattr(clone, name, getattr(self, name).copy())
        return clone


def check_reward(reward: float) -> None:
    if not 0.0 <= reward <= 1.0:  # también rechaza NaN
        raise RewardRangeError(f"Recompensa fuera de [0, 1]: {reward}")


def build_full_tree(depth: int) -> TreeIndex:
    """
    Construye un árbol binario completo de profundidad D sin visitas

    Args:
        depth (int): Profundidad D >= 1

    Returns:
        TreeIndex: Árbol con 2^{D+1} - 1 nodos y todas las cotas a +inf
    """
    if isinstance(depth, bool) or not isinstance(depth, (int, np.integer)) or depth < 1:
        raise TreeConstructionError(f"La profundidad debe ser un entero >= 1 (recibido: {depth!r})")
    depth = int(depth)
    if depth + 1 >= np.iinfo(np.intp).bits - 1:
        raise TreeConstructionError(
            f"Un árbol de profundidad {depth} no cabe en el rango de índices de la plataforma")

    node_count = (1 << (depth + 1)) - 1
    try:
        tree = TreeIndex(depth, capacity=node_count)
    except MemoryError as e:
        raise TreeConstructionError(
            f"Memoria insuficiente para {node_count} nodos (profundidad {depth})") from e

    index = np.arange(node_count, dtype=np.int64)
    for level in range(depth + 1):
        start, stop = (1 << level) - 1, (1 << (level + 1)) - 1
        tree.depth[start:stop] = level
        tree.position[start:stop] = index[start:stop] - start
    internal = index[:(1 << depth) - 1]
    tree.left[:len(internal)] = 2 * internal + 1
    tree.right[:len(internal)] = 2 * internal + 2
    tree.parent[1:] = (index[1:] - 1) // 2
    tree.node_count = node_count
    tree.full = True

    logger.debug(f"Árbol completo construido: D={depth}, {node_count} nodos")
    return tree


def leaf_index_to_interval(leaf: int, depth: int) -> tuple[float, float]:
    """
    Centro y semiancho del intervalo [j/2^D, (j+1)/2^D] asociado a la hoja j

    Returns:
        (float, float): (centro y_j, semiancho 2^{-(D+1)})
    """
    if depth < 1:
        raise TreeConstructionError(f"La profundidad debe ser >= 1 (recibido: {depth})")
    if not 0 <= leaf < (1 << depth):
        raise InvalidPathError(f"Hoja fuera de rango: {leaf} (hay {1 << depth})")
    return math.ldexp(2 * leaf + 1, -(depth + 1)), math.ldexp(1.0, -(depth + 1))
