#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Ejecución de experimentos y escritura de resultados

Lanza las réplicas con semillas semilla_base + índice (en paralelo si
workers > 1), agrega R_n/n y escribe CSV, JSON y DOT en el directorio de
salida. Los archivos no llevan marcas de tiempo: la misma especificación y
semilla producen los mismos bytes.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from .analysis import (brute_force_values, envelope_respected, first_hit_analysis, growing_shape_summary,
                       lower_bound_sqrt, theorem3_envelope, theorem_bound)
from .config import ExperimentSpec
from .engine import RunConfig, pseudo_regret_gap_bound, run
from .environments import LeafRewardModel
from .errors import ConfigError
from .growing import GrowingRunConfig, run_growing
from .logger import get_logger
from .policies import PolicyConfig, PolicyKind, SmoothnessKind
from .tree import NO_NODE, TreeIndex, leaf_index_to_interval
from .utils import format_real

logger = get_logger('bandit_tree.experiment')

STD_NOTE = '# std: desviación típica insesgada (divisor M-1) sobre las réplicas'


@dataclass
class ReplicationSummary:
    """Resultado ligero de una réplica (se transfiere entre procesos)"""

    index: int
    seed: int
    rounds: int
    regret: float
    pseudo_regret: float
    suboptimal_rounds: int
    gap_bound: float
    checkpoints: list = field(default_factory=list)
    leaf_visits: np.ndarray | None = None
    first_hit: dict | None = None
    bound_violation_round: int | None = None
    envelope_respected: bool | None = None
    growing: dict | None = None
    tree: TreeIndex | None = None

    @property
    def regret_per_round(self) -> float:
        return self.regret / self.rounds

    @property
    def pseudo_regret_per_round(self) -> float:
        return self.pseudo_regret / self.rounds

    @property
    def gap_bound_holds(self) -> bool:
        return abs(self.regret - self.pseudo_regret) <= self.gap_bound


def _policy(spec: ExperimentSpec, delta: float | None, algorithm: PolicyKind | None) -> PolicyConfig:
    if algorithm is not None and algorithm is not spec.algorithm:
        return PolicyConfig(algorithm, beta=spec.beta, depth_limit=spec.depth)
    return spec.policy_config(delta)


def run_replication(spec: ExperimentSpec, index: int, rounds: int, delta: float | None = None,
                    algorithm: PolicyKind | None = None) -> ReplicationSummary:
    """
    Ejecuta una réplica del experimento

    Args:
        spec (ExperimentSpec): Experimento
        index (int): Índice de la réplica
        rounds (int): Rondas (etapas en growing_bast)
        delta (float | None): δ alternativo (barrido)
        algorithm (PolicyKind | None): Algoritmo alternativo (fila de referencia)

    Returns:
        ReplicationSummary: Resumen de la réplica
    """
    seed = spec.replication_seed(index)
    policy = _policy(spec, delta, algorithm)
    environment = spec.make_environment(seed)

    if policy.kind is PolicyKind.GROWING_BAST:
        return _growing_replication(spec, index, seed, rounds, policy, environment)

    trace = run(RunConfig(
        policy=policy,
        environment=environment,
        rounds=rounds,
        seed=seed,
        tie_break=spec.tie_break,
        first_visit_order=spec.first_visit_order,
        checkpoint_stride=spec.checkpoint_stride,
        track_bound_violations=spec.track_bound_violations,
        stop_at_first_hit=spec.stop_at_first_hit,
    ))
    summary = ReplicationSummary(
        index=index,
        seed=seed,
        rounds=trace.rounds,
        regret=trace.regret,
        pseudo_regret=trace.pseudo_regret,
        suboptimal_rounds=trace.suboptimal_rounds,
        gap_bound=pseudo_regret_gap_bound(trace, spec.beta),
        checkpoints=[(c.t, c.leaf, c.reward, c.regret, c.pseudo_regret) for c in trace.checkpoints],
        leaf_visits=trace.leaf_visits,
        bound_violation_round=trace.bound_violation_round,
    )
    if spec.emit.get('tree_dump'):
        summary.tree = trace.tree
    if spec.emit.get('first_hit'):
        summary.first_hit = first_hit_analysis(trace).to_dict()
    if spec.emit.get('theory_bounds') and policy.kind is PolicyKind.BAST:
        values = brute_force_values(environment)
        envelope = theorem3_envelope(values, policy.smoothness, spec.beta)
        summary.envelope_respected = envelope_respected(values, envelope, trace.node_visits)
    return summary


def _growing_replication(spec, index, seed, stages, policy, environment) -> ReplicationSummary:
    trace = run_growing(GrowingRunConfig(
        policy=policy,
        environment=environment,
        expansions=stages,
        seed=seed,
        tie_break=spec.tie_break,
        first_visit_order=spec.first_visit_order,
    ))
    shape = growing_shape_summary(trace.tree, target_point(environment), spec.window)
    growing = {
        'stages': trace.stages,
        'expansions': trace.expansions,
        'terminal_samples': trace.terminal_samples,
        'samples': trace.samples,
        'node_count': trace.node_count,
        'bounded': trace.bounded,
        'frontier_profile': {str(d): c for d, c in trace.frontier_profile.items()},
        'shape': shape.to_dict(),
    }
    return ReplicationSummary(
        index=index,
        seed=seed,
        rounds=trace.samples,
        regret=trace.regret,
        pseudo_regret=trace.pseudo_regret,
        suboptimal_rounds=trace.samples,
        gap_bound=math.nan,
        growing=growing,
        tree=trace.tree,
    )


def target_point(environment: LeafRewardModel) -> float:
    """x* del entorno: el maximizador de f o el centro de la primera hoja óptima"""
    x_star = getattr(environment, 'x_star', None)
    if x_star is not None:
        return x_star
    leaf = environment.optimal_value()[1][0]
    return leaf_index_to_interval(leaf, environment.depth_limit)[0]


def replicate(spec: ExperimentSpec, rounds: int, delta: float | None = None,
              algorithm: PolicyKind | None = None, quiet: bool = False) -> list[ReplicationSummary]:
    """
    Ejecuta todas las réplicas y las devuelve en orden de índice

    Args:
        spec (ExperimentSpec): Experimento (workers > 1 = procesos en paralelo)
        rounds (int): Rondas por réplica
        delta (float | None): δ alternativo
        algorithm (PolicyKind | None): Algoritmo alternativo
        quiet (bool): Sin barra de progreso

    Returns:
        list[ReplicationSummary]: Resúmenes ordenados por réplica
    """
    count = spec.replications
    indices = range(count)
    label = f"{(algorithm or spec.algorithm).value} n={rounds}" + ('' if delta is None else f" δ={delta:g}")
    logger.info(f"Réplicas: {count} ({label}), {spec.workers} proceso(s)")

    if spec.workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=min(spec.workers, count)) as executor:
            results = executor.map(run_replication, [spec] * count, indices, [rounds] * count,
                                   [delta] * count, [algorithm] * count)
            return list(tqdm(results, total=count, desc=label, disable=quiet))
    return [run_replication(spec, i, rounds, delta, algorithm)
            for i in tqdm(indices, total=count, desc=label, disable=quiet)]


def mean_std(values) -> tuple[float, float]:
    """Media y desviación típica insesgada (NaN con una sola réplica)"""
    values = np.asarray(values, dtype=np.float64)
    std = float(np.std(values, ddof=1)) if len(values) > 1 else math.nan
    return float(np.mean(values)), std


# ----------------------------------------------------------------------
# Escritura de archivos
# ----------------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return format_real(float(value))
    if value is None:
        return ''
    return str(value)


def write_csv(path: Path, columns, rows, comments=()) -> Path:
    """CSV con comentarios iniciales '#', cabecera fija y reales a 17 cifras"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        for comment in comments:
            f.write(comment + '\n')
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug(f"Escrito {path}")
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(_jsonable(data), f, indent=2, ensure_ascii=False)
        f.write('\n')
    logger.debug(f"Escrito {path}")
    return path


def tree_to_json(tree: TreeIndex, visited_only: bool = False) -> dict:
    """Estructura del árbol: profundidad, posición, intervalo, visitas, media e hijos por nodo"""
    nodes = []
    for node in range(tree.node_count):
        visits = int(tree.visits[node])
        if visited_only and visits == 0:
            continue
        lo, hi = tree.interval(node)
        left = int(tree.left[node])
        nodes.append({
            'id': node,
            'depth': int(tree.depth[node]),
            'position': int(tree.position[node]),
            'interval': [lo, hi],
            'visits': visits,
            'mean': tree.mean(node),
            'children': None if left == NO_NODE else [left, int(tree.right[node])],
        })
    return {'depth_limit': tree.depth_limit, 'node_count': tree.node_count, 'nodes': nodes}


def tree_to_dot(tree: TreeIndex, visited_only: bool = False) -> str:
    """Árbol en formato DOT con las visitas y la media de cada nodo"""
    lines = ['digraph tree {', '  node [shape=circle, fontsize=8];']
    for node in range(tree.node_count):
        visits = int(tree.visits[node])
        if visited_only and visits == 0:
            continue
        mean = tree.mean(node)
        label = f'{visits}' if mean is None else f'{visits}\\n{mean:.3f}'
        lines.append(f'  n{node} [label="{label}"];')
        parent = int(tree.parent[node])
        if parent != NO_NODE:
            lines.append(f'  n{parent} -> n{node};')
    lines.append('}')
    return '\n'.join(lines) + '\n'


def write_tree(directory: Path, stem: str, tree: TreeIndex, visited_only: bool) -> list[Path]:
    dot_path = directory / f'{stem}.dot'
    dot_path.parent.mkdir(parents=True, exist_ok=True)
    dot_path.write_text(tree_to_dot(tree, visited_only))
    return [dot_path, write_json(directory / f'{stem}.json', tree_to_json(tree, visited_only))]


def theory_bounds(spec: ExperimentSpec, rounds: int, summaries: list[ReplicationSummary]) -> dict:
    """Valores de las cotas teóricas aplicables junto al pseudo-regret medido"""
    environment = spec.make_environment(spec.seed)
    values = brute_force_values(environment)
    measured = [s.pseudo_regret for s in summaries]
    bounds = {}
    kind = spec.algorithm
    if kind is PolicyKind.MODIFIED_UCT:
        bounds['thm1'] = theorem_bound('thm1', values, spec.beta, n=rounds)
    elif kind is PolicyKind.FLAT_UCB:
        bounds['thm2'] = theorem_bound('thm2', values, spec.beta)
        bounds['thm2_simple'] = theorem_bound('thm2_simple', values, spec.beta)
    elif kind is PolicyKind.BAST:
        seq = spec.smoothness
        if seq.kind is SmoothnessKind.EXPONENTIAL and math.isfinite(seq.delta):
            bounds['thm4'] = theorem_bound('thm4', values, spec.beta, eta=spec.eta, seq=seq)
            bounds['thm4_simple'] = theorem_bound('thm4_simple', values, spec.beta, eta=spec.eta, seq=seq)
        respected = [s.envelope_respected for s in summaries if s.envelope_respected is not None]
        if respected:
            bounds['envelope_violation_fraction'] = 1.0 - float(np.mean(respected))
    elif kind is PolicyKind.UCT_SQRT:
        bounds['log10_first_hit_lower_bound'] = lower_bound_sqrt(spec.depth)

    violations = [s.bound_violation_round is not None for s in summaries]
    return {
        'algorithm': kind.value,
        'beta': spec.beta,
        'depth': spec.depth,
        'rounds': rounds,
        'eta': spec.eta,
        'mu_star': values.mu_star,
        'measured_pseudo_regret': measured,
        'bounds': bounds,
        'bound_violation_fraction': float(np.mean(violations)) if spec.track_bound_violations else None,
        'gap_bound_fraction_held': float(np.mean([s.gap_bound_holds for s in summaries])),
    }


def _write_full_outputs(spec: ExperimentSpec, rounds: int, summaries: list[ReplicationSummary]) -> list[Path]:
    out = spec.output_dir
    files = []
    for s in summaries:
        suffix = f'n{rounds}_rep{s.index}'
        if spec.emit.get('regret_curve'):
            files.append(write_csv(out / f'regret_curve_{suffix}.csv',
                                   ['t', 'leaf', 'reward', 'regret', 'pseudo_regret'], s.checkpoints))
        if spec.emit.get('leaf_histogram'):
            rows = []
            for leaf, visits in enumerate(s.leaf_visits):
                center = leaf_index_to_interval(leaf, spec.depth)[0]
                rows.append((leaf, center, int(visits), int(visits) / s.rounds))
            files.append(write_csv(out / f'histogram_{suffix}.csv',
                                   ['leaf', 'center', 'visits', 'proportion'], rows))
        if spec.emit.get('tree_dump'):
            files.extend(write_tree(out, f'tree_{suffix}', s.tree, visited_only=True))

    if spec.emit.get('first_hit'):
        files.append(write_json(out / f'first_hit_n{rounds}.json',
                                [{'replication': s.index, 'seed': s.seed, **s.first_hit} for s in summaries]))
    if spec.emit.get('theory_bounds'):
        files.append(write_json(out / f'theory_bounds_n{rounds}.json', theory_bounds(spec, rounds, summaries)))
    return files


def _write_growing_outputs(spec: ExperimentSpec, stages: int, summaries: list[ReplicationSummary]) -> list[Path]:
    out = spec.output_dir
    files = []
    rows = []
    for s in summaries:
        suffix = f'n{stages}_rep{s.index}'
        shape = s.growing['shape']
        rows.append((s.index, s.seed, stages, s.growing['node_count'], shape['max_depth'],
                     shape['max_depth_inside'], shape['max_depth_outside'], shape['fraction_inside'],
                     shape['deepest_contains_x_star'], s.growing['terminal_samples'],
                     s.regret, s.pseudo_regret))
        if spec.emit.get('tree_dump'):
            files.extend(write_tree(out, f'growing_tree_{suffix}', s.tree, visited_only=False))
        files.append(write_json(out / f'growing_{suffix}.json', s.growing))
    files.append(write_csv(
        out / f'growing_summary_n{stages}.csv',
        ['replication', 'seed', 'stages', 'node_count', 'max_depth', 'max_depth_inside', 'max_depth_outside',
         'fraction_inside', 'deepest_contains_x_star', 'terminal_samples', 'regret', 'pseudo_regret'],
        rows,
        comments=[f'# ventana alrededor de x*: [{format_real(spec.window[0])}, {format_real(spec.window[1])}]',
                  '# terminal_samples > 0: la frontera alcanzó la profundidad máxima del entorno'],
    ))
    return files


AGGREGATE_COLUMNS = ['rounds', 'replications', 'mean_regret_per_round', 'std_regret_per_round',
                     'mean_pseudo_regret_per_round', 'std_pseudo_regret_per_round', 'gap_bound_fraction_held']


def _aggregate_row(rounds: int, summaries: list[ReplicationSummary]) -> tuple:
    regret_mean, regret_std = mean_std([s.regret_per_round for s in summaries])
    pseudo_mean, pseudo_std = mean_std([s.pseudo_regret_per_round for s in summaries])
    checked = [s.gap_bound_holds for s in summaries if not math.isnan(s.gap_bound)]
    held = float(np.mean(checked)) if checked else math.nan
    return rounds, len(summaries), regret_mean, regret_std, pseudo_mean, pseudo_std, held


@dataclass
class ExperimentReport:
    files: list[Path] = field(default_factory=list)
    rows: list[tuple] = field(default_factory=list)


def run_experiment(spec: ExperimentSpec, quiet: bool = False) -> ExperimentReport:
    """
    Ejecuta el experimento para cada valor de rounds y escribe los resultados

    Args:
        spec (ExperimentSpec): Experimento validado
        quiet (bool): Sin barras de progreso

    Returns:
        ExperimentReport: Archivos escritos y filas agregadas
    """
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    report = ExperimentReport()
    report.files.append(write_json(out / 'config.json', spec.to_dict()))

    for rounds in spec.rounds:
        summaries = replicate(spec, rounds, quiet=quiet)
        if spec.algorithm is PolicyKind.GROWING_BAST:
            report.files.extend(_write_growing_outputs(spec, rounds, summaries))
        else:
            report.files.extend(_write_full_outputs(spec, rounds, summaries))
        report.rows.append(_aggregate_row(rounds, summaries))

    report.files.append(write_csv(out / 'aggregate.csv', AGGREGATE_COLUMNS, report.rows, comments=[STD_NOTE]))
    logger.info(f"Experimento '{spec.name}' completado: {len(report.files)} archivos en {out}")
    return report


SWEEP_COLUMNS = ['rounds', 'algorithm', 'delta', 'replications', 'mean_regret_per_round', 'std_regret_per_round',
                 'mean_pseudo_regret_per_round', 'std_pseudo_regret_per_round']


def delta_sweep(spec: ExperimentSpec, deltas=None, quiet: bool = False) -> ExperimentReport:
    """
    Barrido de δ de BAST: una fila por (rondas, δ) con media y desviación de R_n/n

    Args:
        spec (ExperimentSpec): Experimento con algoritmo bast
        deltas (list[float] | None): Valores de δ (por defecto sweep.deltas)
        quiet (bool): Sin barras de progreso

    Returns:
        ExperimentReport: sweep.csv y filas
    """
    if spec.algorithm is not PolicyKind.BAST:
        raise ConfigError(f"El barrido de δ necesita el algoritmo bast (es {spec.algorithm.value})")
    deltas = tuple(spec.sweep_deltas if deltas is None else deltas)
    if not deltas:
        raise ConfigError("El barrido necesita al menos un valor de δ (sweep.deltas)")

    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    report = ExperimentReport()
    report.files.append(write_json(out / 'config.json', spec.to_dict()))

    for rounds in spec.rounds:
        for delta in deltas:
            summaries = replicate(spec, rounds, delta=delta, quiet=quiet)
            row = _aggregate_row(rounds, summaries)
            report.rows.append((rounds, PolicyKind.BAST.value, delta, *row[1:6]))
        if spec.include_flat_ucb:
            summaries = replicate(spec, rounds, algorithm=PolicyKind.FLAT_UCB, quiet=quiet)
            row = _aggregate_row(rounds, summaries)
            report.rows.append((rounds, PolicyKind.FLAT_UCB.value, None, *row[1:6]))

    comments = [
        STD_NOTE,
        '# delta=inf: BAST con β_n = β/(2Nn(n+1)), N = 2^(D+1)-1; flat_ucb usa β_n = β/(2^(D+1)n(n+1))',
    ]
    report.files.append(write_csv(out / 'sweep.csv', SWEEP_COLUMNS, report.rows, comments=comments))
    logger.info(f"Barrido completado: {len(report.rows)} filas en {out / 'sweep.csv'}")
    return report
