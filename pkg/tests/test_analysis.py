# -*- coding: utf-8 -*-
import math
from decimal import Decimal, localcontext

import numpy as np
import pytest

from lib.analysis import (TheoremKind, brute_force_values, check_full_tree_conservation, envelope_respected,
                          first_hit_analysis, growing_shape_summary, lower_bound_sqrt, satisfies_a_star,
                          smoothness_violations, theorem1_rhs, theorem3_envelope, theorem_bound)
from lib.engine import RunConfig, run
from lib.environments import BadCaseEnvironment, BernoulliFunctionEnvironment, TableEnvironment
from lib.errors import ConfigError
from lib.policies import PolicyConfig, SmoothnessSeq, smoothness_delta
from lib.tree import ROOT, TreeIndex, build_full_tree


def first_hit(kind, depth, rounds=100_000):
    cfg = RunConfig(PolicyConfig(kind, depth_limit=depth), BadCaseEnvironment(depth), rounds,
                    first_visit_order='action2_first', stop_at_first_hit=True)
    return first_hit_analysis(run(cfg))


# ----------------------------------------------------------------------
# Valores por fuerza bruta
# ----------------------------------------------------------------------

def test_brute_force_values_on_table(smooth_table):
    values = brute_force_values(smooth_table)
    assert values.mu_star == 0.8
    assert values.mu[:7].tolist() == [0.8, 0.4, 0.8, 0.3, 0.4, 0.5, 0.8]
    assert values.leaf_min[1] == 0.2
    assert values.depth.tolist() == [0, 1, 1, 2, 2, 2, 2] + [3] * 8
    assert values.optimal.tolist()[:3] == [True, False, True]
    assert values.node_count == 15
    assert values.eta_optimal_leaves(0.15).tolist() == [6, 7]
    assert values.suboptimal_leaves().tolist() == [0, 1, 2, 3, 4, 5, 7]
    assert ROOT in values.eta_optimal(0.0)


def test_brute_force_values_bad_case():
    values = brute_force_values(BadCaseEnvironment(3))
    assert values.mu_star == 1.0
    assert values.mu[2] == pytest.approx(2.0 / 3.0)
    assert values.mu[1] == 1.0


def test_brute_force_optimal_leaf_of_function():
    env = BernoulliFunctionEnvironment(0.1, depth_limit=10)
    values = brute_force_values(env)
    assert np.flatnonzero(values.leaf_gaps == 0).tolist() == [921]
    assert values.mu_star == env.optimal_value()[0]


def test_brute_force_values_are_read_only(smooth_table):
    values = brute_force_values(smooth_table)
    with pytest.raises(ValueError):
        values.mu[0] = 0.0


def test_brute_force_rejects_depth_mismatch(smooth_table):
    with pytest.raises(ConfigError):
        brute_force_values(smooth_table, depth=4)
    with pytest.raises(ConfigError):
        brute_force_values(BernoulliFunctionEnvironment(0.1))


# ----------------------------------------------------------------------
# Envolvente de visitas
# ----------------------------------------------------------------------

@pytest.fixture
def step_table():
    return brute_force_values(TableEnvironment([1.0, 0.5, 0.5, 0.5]))


def test_envelope_leaf_values(step_table):
    envelope = theorem3_envelope(step_table, SmoothnessSeq('infinite'), 0.1)
    leaf = 24.0 * math.log(1120.0)
    assert envelope[4] == pytest.approx(leaf)
    assert envelope[4] == pytest.approx(168.506, abs=1e-3)
    assert math.isnan(envelope[3])
    assert math.isnan(envelope[ROOT])
    assert math.isnan(envelope[1])
    # δ infinito: el nodo interno solo suma las de sus hijos
    assert envelope[2] == pytest.approx(2 * leaf)


def test_envelope_takes_direct_bound_when_gap_exceeds_smoothness(step_table):
    envelope = theorem3_envelope(step_table, SmoothnessSeq('zero'), 0.1)
    assert envelope[2] == pytest.approx(24.0 * math.log(1120.0))


def test_envelope_grows_as_beta_shrinks(step_table):
    loose = theorem3_envelope(step_table, SmoothnessSeq('zero'), 0.5)
    tight = theorem3_envelope(step_table, SmoothnessSeq('zero'), 0.01)
    suboptimal = step_table.gap > 0
    assert np.all(tight[suboptimal] > loose[suboptimal])


def test_envelope_respected(step_table):
    envelope = theorem3_envelope(step_table, SmoothnessSeq('zero'), 0.1)
    assert envelope_respected(step_table, envelope, np.zeros(7, dtype=np.int64))
    visits = np.zeros(7, dtype=np.int64)
    visits[5] = 10_000
    assert not envelope_respected(step_table, envelope, visits)


def test_envelope_rejects_bad_beta(step_table):
    with pytest.raises(ConfigError):
        theorem3_envelope(step_table, SmoothnessSeq('zero'), 0.0)


# ----------------------------------------------------------------------
# Cotas de regret
# ----------------------------------------------------------------------

def test_theorem1_rhs():
    assert theorem1_rhs(1, 1, 1.0) == pytest.approx((2.0 + math.sqrt(2.0)) / 2.0 + 1.0)
    assert theorem1_rhs(1, 1, 1.0) == pytest.approx(2.70711, abs=1e-5)


def test_theorem1_bound(step_table):
    n = 1000
    expected = theorem1_rhs(2, n, math.log(2.0 * 7 * n * (n + 1) / 0.1))
    assert theorem_bound('thm1', step_table, 0.1, n=n) == pytest.approx(expected)
    with pytest.raises(ConfigError):
        theorem_bound('thm1', step_table, 0.1)


def test_theorem2_bounds():
    values = brute_force_values(TableEnvironment([1.0, 0.0]))
    assert theorem_bound(TheoremKind.THM2, values, 0.5) == pytest.approx(6.0 * math.log(16.0))
    assert theorem_bound('thm2_simple', values, 0.5) == pytest.approx(2 * 6.0 * math.log(16.0))
    flat = brute_force_values(TableEnvironment([0.5, 0.5]))
    assert theorem_bound('thm2', flat, 0.5) == 0.0


def test_simplified_bounds_dominate(smooth_table, halving_smoothness):
    values = brute_force_values(smooth_table)
    assert theorem_bound('thm2_simple', values, 0.1) >= theorem_bound('thm2', values, 0.1)
    full = theorem_bound('thm4', values, 0.1, eta=0.35, seq=halving_smoothness)
    simple = theorem_bound('thm4_simple', values, 0.1, eta=0.35, seq=halving_smoothness)
    assert simple >= full


def test_theorem4_tail(smooth_table, halving_smoothness):
    values = brute_force_values(smooth_table)
    eta = 0.05
    scale = 4.0 * 15 / 0.1
    tail = 54.0 * 3.0 / eta ** 3 * math.log(scale / eta ** 2)
    # Ninguna hoja subóptima tiene Δ <= 0.05: solo queda la cola
    assert theorem_bound('thm4', values, 0.1, eta=eta, seq=halving_smoothness) == pytest.approx(tail)


@pytest.mark.parametrize('kwargs', [
    {'eta': None, 'seq': SmoothnessSeq('exponential', delta=1.0)},
    {'eta': 0.0, 'seq': SmoothnessSeq('exponential', delta=1.0)},
    {'eta': 0.1, 'seq': None},
    {'eta': 0.1, 'seq': SmoothnessSeq('zero')},
])
def test_theorem4_requires_eta_and_exponential_smoothness(smooth_table, kwargs):
    values = brute_force_values(smooth_table)
    with pytest.raises(ConfigError):
        theorem_bound('thm4', values, 0.1, **kwargs)


def test_theorem_bound_rejects_bad_beta(smooth_table):
    with pytest.raises(ConfigError):
        theorem_bound('thm2', brute_force_values(smooth_table), 1.0)


def test_lower_bound_sqrt():
    assert lower_bound_sqrt(20) == pytest.approx(156837.63, abs=0.05)
    assert lower_bound_sqrt(1) == pytest.approx(math.log10(2.0))
    with pytest.raises(ConfigError):
        lower_bound_sqrt(0)


# ----------------------------------------------------------------------
# Suavidad
# ----------------------------------------------------------------------

def test_lipschitz_function_has_no_violations():
    values = brute_force_values(BernoulliFunctionEnvironment(0.1, depth_limit=10))
    assert smoothness_violations(values, SmoothnessSeq('exponential', delta=10.0, gamma=0.5)) == []


def test_zero_smoothness_is_violated():
    values = brute_force_values(BernoulliFunctionEnvironment(0.1, depth_limit=6))
    violations = smoothness_violations(values, SmoothnessSeq('zero'))
    assert violations
    assert all(excess > 0 for _, excess in violations)
    optimal_only = smoothness_violations(values, SmoothnessSeq('zero'), scope='optimal')
    assert 0 < len(optimal_only) <= len(violations)
    assert all(values.optimal[node] for node, _ in optimal_only)


def test_smoothness_scope_errors(smooth_table):
    values = brute_force_values(smooth_table)
    with pytest.raises(ConfigError):
        smoothness_violations(values, SmoothnessSeq('zero'), scope='eta')
    with pytest.raises(ConfigError):
        smoothness_violations(values, SmoothnessSeq('zero'), scope='some')


def test_eta_scope_restricts_candidates(smooth_table):
    values = brute_force_values(smooth_table)
    nodes = [node for node, _ in smoothness_violations(values, SmoothnessSeq('zero'), scope='eta', eta=0.15)]
    assert nodes and all(values.gap[node] <= 0.15 for node in nodes)


def test_satisfies_a_star(smooth_table, halving_smoothness):
    values = brute_force_values(smooth_table)
    assert satisfies_a_star(values, halving_smoothness)
    assert not satisfies_a_star(values, SmoothnessSeq('zero'))
    assert smoothness_violations(values, halving_smoothness, scope='optimal') == []


# ----------------------------------------------------------------------
# Primer acceso en el árbol adversario
# ----------------------------------------------------------------------

def test_first_hit_uct_log():
    report = first_hit('uct_log', 3)
    assert not report.censored
    assert report.round == 12
    assert report.counts == (12, 4, 2, 1)
    assert len(report.checks) == 3
    assert report.recursion_holds


def test_first_hit_uct_sqrt():
    report = first_hit('uct_sqrt', 4)
    assert report.round == 43
    assert report.counts == (43, 11, 4, 2, 1)
    assert report.recursion_holds
    assert report.to_dict()['counts'] == [43, 11, 4, 2, 1]


@pytest.mark.parametrize('depth', [3, 4, 6])
def test_first_hit_modified_uct(depth):
    report = first_hit('modified_uct', depth)
    assert report.round == 1 << depth
    assert report.checks == ()


def test_uct_sqrt_first_hit_grows_with_depth():
    shallow = first_hit('uct_sqrt', 4)
    deep = first_hit('uct_sqrt', 6)
    assert deep.round == 550
    assert deep.round >= 10 * shallow.round
    assert first_hit('modified_uct', 6).round < deep.round


def test_first_hit_censored():
    report = first_hit('uct_sqrt', 6, rounds=100)
    assert report.censored
    assert report.budget == 100
    assert report.round is None
    assert report.to_dict()['recursion_holds'] is None


# ----------------------------------------------------------------------
# Contabilidad y forma
# ----------------------------------------------------------------------

def test_full_tree_conservation():
    tree = build_full_tree(2)
    assert check_full_tree_conservation(tree, 0)
    tree.record_visit(tree.path_to(tree.leaf_node(1)), 1.0)
    assert check_full_tree_conservation(tree, 1)
    assert not check_full_tree_conservation(tree, 2)
    tree.visits[3] += 1
    assert not check_full_tree_conservation(tree, 1)


def test_growing_shape_summary():
    tree = TreeIndex.growing()
    _, right = tree.expand(ROOT)
    tree.expand(right)
    summary = growing_shape_summary(tree, 0.9)
    assert summary.max_depth == 2
    assert summary.deepest_node == 4
    assert summary.deepest_interval == (0.75, 1.0)
    assert summary.deepest_contains_x_star
    assert summary.deepest_distance == 0.0
    assert summary.max_depth_inside == 2
    assert summary.max_depth_outside == 2
    assert summary.fraction_inside == pytest.approx(0.6)
    assert summary.depth_counts == {0: 1, 1: 2, 2: 2}
    assert summary.to_dict()['depth_counts'] == {'0': 1, '1': 2, '2': 2}


# ----------------------------------------------------------------------
# Oráculos de las cotas teóricas en aritmética decimal de 50 dígitos
# ----------------------------------------------------------------------

ORACLE_CASES = 1000
REL_TOL = 1e-12


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)


def assert_close(value: float, oracle: Decimal):
    assert abs(Decimal(value) - oracle) <= Decimal(REL_TOL) * abs(oracle)


def random_values(rng, max_depth=6):
    depth = int(rng.integers(1, max_depth + 1))
    return brute_force_values(TableEnvironment(rng.random(1 << depth).tolist()))


def random_exponential(rng) -> SmoothnessSeq:
    return SmoothnessSeq('exponential', delta=float(rng.uniform(0.1, 20.0)), gamma=float(rng.uniform(0.1, 0.9)))


def d_visits(scale: Decimal, gap: Decimal) -> Decimal:
    """6 ln(scale / Δ²) / Δ"""
    return 6 * (scale / gap ** 2).ln() / gap


def oracle_theorem1(depth, n, log_inv_beta_n):
    with localcontext() as ctx:
        ctx.prec = 50
        root = 1 + Decimal(2).sqrt()
        return (root / 2 * (root ** depth - 1) * (Decimal(log_inv_beta_n) * n).sqrt()
                + (Decimal(3) ** depth - 1) / 2)


def oracle_theorem1_bound(depth, n, beta):
    with localcontext() as ctx:
        ctx.prec = 50
        node_count = 2 ** (depth + 1) - 1
        log_inv = (Decimal(2 * node_count * n * (n + 1)) / Decimal(beta)).ln()
        return oracle_theorem1(depth, n, log_inv)


def oracle_theorem2(gaps, depth, beta, simple=False):
    with localcontext() as ctx:
        ctx.prec = 50
        scale = Decimal(2) ** (depth + 2) / Decimal(beta)
        positive = [Decimal(float(g)) for g in gaps if g > 0]
        if not positive:
            return Decimal(0)
        if simple:
            smallest = min(positive)
            return Decimal(2) ** depth * d_visits(scale, smallest)
        return sum(d_visits(scale, g) for g in positive)


def oracle_theorem4_tail(seq, eta, scale):
    c = Decimal(2).ln() / (1 / Decimal(seq.gamma)).ln()
    eta = Decimal(eta)
    return 54 * (3 * Decimal(seq.delta)) ** c / eta ** (2 + c) * (scale / eta ** 2).ln()


def oracle_theorem4(gaps, depth, beta, eta, seq, simple=False):
    with localcontext() as ctx:
        ctx.prec = 50
        node_count = 2 ** (depth + 1) - 1
        scale = 4 * node_count / Decimal(beta)
        tail = oracle_theorem4_tail(seq, eta, scale)
        if not simple:
            return sum((d_visits(scale, Decimal(float(g))) for g in gaps if 0 < g <= eta), Decimal(0)) + tail
        positive = [Decimal(float(g)) for g in gaps if g > 0]
        if not positive:
            return tail
        j_size = sum(1 for g in gaps if g <= eta)
        return j_size * d_visits(scale, min(positive)) + tail


def oracle_envelope(values, seq, beta):
    with localcontext() as ctx:
        ctx.prec = 50
        depth = values.depth_limit
        scale = 4 * values.node_count / Decimal(beta)
        gaps = values.gap
        envelope = [None] * values.node_count
        for d in range(depth, -1, -1):
            delta_d = Decimal(smoothness_delta(seq, d))
            for node in range((1 << d) - 1, (1 << (d + 1)) - 1):
                gap = Decimal(float(gaps[node]))
                if gap <= 0:
                    continue
                if d == depth:
                    envelope[node] = d_visits(scale, gap) / gap
                    continue
                bound = envelope[2 * node + 1] + envelope[2 * node + 2]
                if gap > delta_d:
                    margin = gap - delta_d
                    bound = min(bound, d_visits(scale, margin) / margin)
                envelope[node] = bound
        return envelope


def oracle_lower_bound_sqrt(depth):
    with localcontext() as ctx:
        ctx.prec = 50
        return Decimal(2) ** (depth - 1) * Decimal(2).log10() - 2 * depth * (depth - 1) * Decimal(depth).log10()


def test_theorem1_rhs_matches_oracle(rng):
    for _ in range(ORACLE_CASES):
        depth = int(rng.integers(1, 21))
        n = int(math.exp(rng.uniform(0.0, math.log(1e7))))
        log_inv = float(rng.uniform(0.5, 60.0))
        assert_close(theorem1_rhs(depth, n, log_inv), oracle_theorem1(depth, n, log_inv))


def test_theorem1_bound_matches_oracle(rng):
    for _ in range(ORACLE_CASES):
        values = random_values(rng)
        n = int(math.exp(rng.uniform(0.0, math.log(1e7))))
        beta = float(rng.uniform(0.01, 0.99))
        value = theorem_bound('thm1', values, beta, n=n)
        assert_close(value, oracle_theorem1_bound(values.depth_limit, n, beta))


@pytest.mark.parametrize('kind, simple', [('thm2', False), ('thm2_simple', True)])
def test_theorem2_matches_oracle(rng, kind, simple):
    for _ in range(ORACLE_CASES):
        values = random_values(rng)
        beta = float(rng.uniform(0.01, 0.99))
        value = theorem_bound(kind, values, beta)
        assert_close(value, oracle_theorem2(values.leaf_gaps, values.depth_limit, beta, simple))


@pytest.mark.parametrize('kind, simple', [('thm4', False), ('thm4_simple', True)])
def test_theorem4_matches_oracle(rng, kind, simple):
    for _ in range(ORACLE_CASES):
        values = random_values(rng)
        beta = float(rng.uniform(0.01, 0.99))
        eta = float(rng.uniform(0.01, 1.0))
        seq = random_exponential(rng)
        value = theorem_bound(kind, values, beta, eta=eta, seq=seq)
        assert_close(value, oracle_theorem4(values.leaf_gaps, values.depth_limit, beta, eta, seq, simple))


def test_envelope_matches_oracle(rng):
    for _ in range(ORACLE_CASES):
        values = random_values(rng, max_depth=5)
        beta = float(rng.uniform(0.01, 0.99))
        seq = SmoothnessSeq('exponential', delta=float(rng.uniform(0.0, 1.0)), gamma=float(rng.uniform(0.1, 0.9)))
        envelope = theorem3_envelope(values, seq, beta)
        for node, oracle in enumerate(oracle_envelope(values, seq, beta)):
            if oracle is None:
                assert math.isnan(envelope[node])
            else:
                assert_close(float(envelope[node]), oracle)


def test_lower_bound_sqrt_matches_oracle(rng):
    for _ in range(ORACLE_CASES):
        depth = int(rng.integers(1, 61))
        assert_close(lower_bound_sqrt(depth), oracle_lower_bound_sqrt(depth))
