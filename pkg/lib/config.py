#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Carga y validación de la configuración de experimentos

Primero se carga config/default_config.yaml y después el documento del
experimento (YAML o JSON) se fusiona encima, clave a clave en los
diccionarios anidados. Los argumentos de línea de comandos se aplican al
final.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .engine import FirstVisitOrder, TieBreak
from .environments import EnvironmentKind, LeafRewardModel, make_environment
from .errors import BanditTreeError, ConfigError
from .logger import get_logger
from .policies import PolicyConfig, PolicyKind, SmoothnessKind, SmoothnessSeq

logger = get_logger('bandit_tree.config')

DEFAULT_CONFIG_DIR = Path(__file__).resolve().parent.parent / 'config'
DEFAULT_CONFIG_NAME = 'default_config.yaml'

EMIT_FLAGS = ('regret_curve', 'leaf_histogram', 'tree_dump', 'theory_bounds', 'first_hit')


def load_yaml(path) -> dict:
    """
    Lee un documento YAML (o JSON) y devuelve su contenido

    Args:
        path (str | Path): Ruta del archivo

    Returns:
        dict: Contenido del documento (vacío si el archivo está vacío)
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Archivo de configuración no encontrado: {path}")
    try:
        with open(path, 'r') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Error de sintaxis en {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} debe contener un diccionario de opciones")
    return data


def deep_merge(base: dict, override: dict) -> dict:
    """Fusiona override sobre base; los diccionarios anidados se fusionan clave a clave"""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_real(value, name: str) -> float:
    """Convierte a float aceptando 'inf'/'infinity' (cualquier capitalización) y .inf de YAML"""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ('inf', '+inf', 'infinity', '+infinity', '.inf'):
            return math.inf
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{name} debe ser un número o 'inf' (recibido: {value!r})") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} debe ser un número (recibido: {value!r})")
    return float(value)


def _positive_int(value, name: str, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} debe ser un entero >= 1 (recibido: {value!r})")
    return value


def load_experiment_config(path=None, config_dir=None, overrides: dict | None = None) -> dict:
    """
    Carga la configuración por defecto y fusiona el documento del experimento

    Args:
        path (str | Path | None): Documento del experimento
        config_dir (str | Path | None): Directorio con default_config.yaml
        overrides (dict | None): Valores de la línea de comandos (None = sin cambio)

    Returns:
        dict: Configuración efectiva
    """
    config_dir = Path(config_dir) if config_dir else DEFAULT_CONFIG_DIR
    default_path = config_dir / DEFAULT_CONFIG_NAME
    if default_path.exists():
        config = load_yaml(default_path)
    else:
        logger.warning(f"Configuración por defecto no encontrada: {default_path}")
        config = {}

    if path is not None:
        config = deep_merge(config, load_yaml(path))
        logger.debug(f"Configuración cargada desde {path}")

    for key, value in (overrides or {}).items():
        if value is not None:
            config[key] = value
    return config


@dataclass(frozen=True)
class ExperimentSpec:
    """
    Especificación validada de un experimento

    rounds es una tupla: el experimento se repite para cada valor. En
    growing_bast cada ronda es una etapa de expansión.
    """

    name: str
    algorithm: PolicyKind
    beta: float
    depth: int | None
    rounds: tuple[int, ...]
    replications: int
    seed: int
    workers: int
    output_dir: Path
    smoothness: SmoothnessSeq | None
    environment: dict
    tie_break: str = 'left_first'
    first_visit_order: str = 'action1_first'
    checkpoint_stride: int | None = None
    track_bound_violations: bool = False
    stop_at_first_hit: bool = False
    emit: dict = field(default_factory=dict)
    eta: float = 0.1
    window: tuple[float, float] = (0.8, 1.0)
    sweep_deltas: tuple[float, ...] = ()
    include_flat_ucb: bool = True

    @classmethod
    def from_config(cls, config: dict) -> 'ExperimentSpec':
        """
        Valida un diccionario de configuración

        Args:
            config (dict): Configuración fusionada

        Returns:
            ExperimentSpec: La especificación validada
        """
        try:
            algorithm = PolicyKind(config.get('algorithm'))
        except ValueError:
            choices = ', '.join(k.value for k in PolicyKind)
            raise ConfigError(
                f"Algoritmo desconocido: {config.get('algorithm')!r} (opciones: {choices})") from None

        environment = dict(config.get('environment') or {})
        if 'kind' not in environment:
            raise ConfigError("Falta environment.kind en la configuración")

        depth = config.get('depth')
        if depth is not None:
            depth = _positive_int(depth, 'depth')
        if environment['kind'] == EnvironmentKind.TABLE.value:
            # La tabla fija la profundidad
            table_depth = make_environment(environment, None).depth_limit
            if depth is not None and depth != table_depth:
                raise ConfigError(f"depth={depth} no coincide con la tabla (D={table_depth})")
            depth = table_depth
        if depth is None and algorithm is not PolicyKind.GROWING_BAST:
            raise ConfigError(f"El algoritmo {algorithm.value} necesita depth")

        rounds = config.get('rounds')
        rounds = tuple(rounds) if isinstance(rounds, (list, tuple)) else (rounds,)
        if not rounds:
            raise ConfigError("rounds no puede estar vacío")
        rounds = tuple(_positive_int(n, 'rounds') for n in rounds)

        smoothness = None
        if algorithm in (PolicyKind.BAST, PolicyKind.GROWING_BAST):
            smoothness = _smoothness_from(config.get('smoothness') or {}, depth)

        seed = config.get('seed', 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed debe ser un entero >= 0 (recibido: {seed!r})")

        for key, enum in (('tie_break', TieBreak), ('first_visit_order', FirstVisitOrder)):
            value = config.get(key, list(enum)[0].value)
            if value not in {member.value for member in enum}:
                choices = ', '.join(member.value for member in enum)
                raise ConfigError(f"{key} desconocido: {value!r} (opciones: {choices})")

        emit = {flag: bool((config.get('emit') or {}).get(flag, False)) for flag in EMIT_FLAGS}
        sweep = config.get('sweep') or {}
        window = tuple(parse_real(v, 'growing.window') for v in (config.get('growing') or {}).get('window', (0.8, 1.0)))
        if len(window) != 2 or not window[0] < window[1]:
            raise ConfigError(f"growing.window debe ser [lo, hi] con lo < hi (recibido: {window})")

        spec = cls(
            name=str(config.get('name', 'experimento')),
            algorithm=algorithm,
            beta=parse_real(config.get('beta', 0.1), 'beta'),
            depth=depth,
            rounds=rounds,
            replications=_positive_int(config.get('replications', 1), 'replications'),
            seed=seed,
            workers=_positive_int(config.get('workers', 1), 'workers'),
            output_dir=Path(config.get('output_dir', './results')),
            smoothness=smoothness,
            environment=environment,
            tie_break=config.get('tie_break', 'left_first'),
            first_visit_order=config.get('first_visit_order', 'action1_first'),
            checkpoint_stride=_positive_int(config.get('checkpoint_stride'), 'checkpoint_stride',
                                            allow_none=True),
            track_bound_violations=bool(config.get('track_bound_violations', False)),
            stop_at_first_hit=bool(config.get('stop_at_first_hit', False)),
            emit=emit,
            eta=parse_real((config.get('theory') or {}).get('eta', 0.1), 'theory.eta'),
            window=window,
            sweep_deltas=tuple(parse_real(d, 'sweep.deltas') for d in sweep.get('deltas', ())),
            include_flat_ucb=bool(sweep.get('include_flat_ucb', True)),
        )
        # Fallos de validación de las piezas antes de lanzar réplicas
        spec.policy_config()
        spec.make_environment(spec.seed)
        return spec

    def policy_config(self, delta: float | None = None) -> PolicyConfig:
        """PolicyConfig del experimento, opcionalmente con otro δ"""
        smoothness = self.smoothness
        if delta is not None:
            if smoothness is None:
                raise ConfigError(f"El algoritmo {self.algorithm.value} no usa suavidad δ")
            smoothness = with_delta(smoothness, delta)
        return PolicyConfig(self.algorithm, beta=self.beta, depth_limit=self.depth, smoothness=smoothness)

    def make_environment(self, seed) -> LeafRewardModel:
        return make_environment(self.environment, self.depth, seed=seed)

    def replication_seed(self, index: int) -> int:
        """Semilla de la réplica: semilla base + índice"""
        return self.seed + index

    def with_overrides(self, **changes) -> 'ExperimentSpec':
        return replace(self, **changes)

    def to_dict(self) -> dict:
        """Configuración efectiva serializable (config.json)"""
        smoothness = None
        if self.smoothness is not None:
            smoothness = {
                'kind': self.smoothness.kind.value,
                'delta': _json_real(self.smoothness.delta),
                'gamma': self.smoothness.gamma,
                'alpha': self.smoothness.alpha,
            }
        return {
            'name': self.name,
            'algorithm': self.algorithm.value,
            'beta': self.beta,
            'depth': self.depth,
            'rounds': list(self.rounds),
            'replications': self.replications,
            'seed': self.seed,
            'workers': self.workers,
            'output_dir': os.fspath(self.output_dir),
            'smoothness': smoothness,
            'environment': self.environment,
            'tie_break': self.tie_break,
            'first_visit_order': self.first_visit_order,
            'checkpoint_stride': self.checkpoint_stride,
            'track_bound_violations': self.track_bound_violations,
            'stop_at_first_hit': self.stop_at_first_hit,
            'emit': self.emit,
            'theory': {'eta': self.eta},
            'growing': {'window': list(self.window)},
            'sweep': {'deltas': [_json_real(d) for d in self.sweep_deltas],
                      'include_flat_ucb': self.include_flat_ucb},
        }


def _json_real(value: float):
    return 'inf' if math.isinf(value) else value


def _smoothness_from(section: dict, depth: int | None) -> SmoothnessSeq:
    try:
        kind = SmoothnessKind(section.get('kind', 'exponential'))
    except ValueError:
        choices = ', '.join(k.value for k in SmoothnessKind)
        raise ConfigError(
            f"Suavidad desconocida: {section.get('kind')!r} (opciones: {choices})") from None
    try:
        return SmoothnessSeq(
            kind=kind,
            delta=parse_real(section.get('delta', 0.0), 'smoothness.delta'),
            gamma=parse_real(section.get('gamma', 0.5), 'smoothness.gamma'),
            alpha=parse_real(section.get('alpha', -1.0), 'smoothness.alpha'),
            depth_limit=depth,
        )
    except BanditTreeError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Suavidad inválida: {e}") from e


def with_delta(seq: SmoothnessSeq, delta: float) -> SmoothnessSeq:
    """La misma sucesión con otro δ (δ = inf pasa a suavidad infinita)"""
    if math.isinf(delta):
        return replace(seq, kind=SmoothnessKind.INFINITE, delta=math.inf)
    kind = seq.kind
    if kind in (SmoothnessKind.INFINITE, SmoothnessKind.ZERO):
        kind = SmoothnessKind.EXPONENTIAL
    return replace(seq, kind=kind, delta=float(delta))


def load_spec(path=None, config_dir=None, overrides: dict | None = None) -> ExperimentSpec:
    """Carga, fusiona y valida la configuración de un experimento"""
    return ExperimentSpec.from_config(load_experiment_config(path, config_dir, overrides))
