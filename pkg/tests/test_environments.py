# -*- coding: utf-8 -*-
import json

import numpy as np
import pytest

from lib.environments import (BadCaseEnvironment, BernoulliFunctionEnvironment, TableEnvironment, bad_case_reward,
                              f_eval, make_environment)
from lib.errors import EnvironmentSpecError


@pytest.mark.parametrize('x, a, expected', [
    (0.9, 0.1, 1.0),
    (0.5, 0.1, 0.9),
    (0.5, 0.3, 0.9),
    (0.0, 0.1, 0.0),
])
def test_f_eval(x, a, expected):
    assert f_eval(x, a) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize('x, a', [(-0.1, 0.1), (1.1, 0.1), (0.5, 0.0), (0.5, -1.0)])
def test_f_eval_rejects_invalid_inputs(x, a):
    with pytest.raises(EnvironmentSpecError):
        f_eval(x, a)


@pytest.mark.parametrize('d, action, depth, expected', [
    (0, 2, 4, 0.75),
    (3, 1, 4, 1.0),
    (3, 2, 4, 0.0),
    (1, 2, 3, 1 / 3),
])
def test_bad_case_reward(d, action, depth, expected):
    assert bad_case_reward(d, action, depth) == pytest.approx(expected)


@pytest.mark.parametrize('d, action, depth', [(0, 1, 4), (0, 3, 4), (4, 2, 4), (-1, 2, 4), (0, 2, 0)])
def test_bad_case_reward_rejects_invalid(d, action, depth):
    with pytest.raises(EnvironmentSpecError):
        bad_case_reward(d, action, depth)


def test_bernoulli_function_optimal_leaf():
    env = BernoulliFunctionEnvironment(0.1, depth_limit=10)
    mu_star, optimal = env.optimal_value()
    assert optimal == (921,)
    assert mu_star == pytest.approx(0.9990234375, abs=1e-12)
    assert env.true_mean(922) == pytest.approx(0.9912109375, abs=1e-12)
    assert env.x_star == pytest.approx(0.9)
    assert env.lipschitz == pytest.approx(10.0)


def test_bernoulli_function_node_means_use_interval_centers():
    env = BernoulliFunctionEnvironment(0.1)
    assert env.node_reward_mean(0, 0) == pytest.approx(0.9)
    assert env.node_reward_mean(1, 1) == pytest.approx(f_eval(0.75, 0.1))
    with pytest.raises(EnvironmentSpecError):
        env.leaf_count


def test_bad_case_means():
    env = BadCaseEnvironment(4)
    mu_star, optimal = env.optimal_value()
    assert mu_star == 1.0
    assert optimal == (0,)
    assert env.true_mean(1) == 0.0
    assert env.true_mean(4) == pytest.approx(0.5)
    assert env.true_mean(8) == pytest.approx(0.75)
    assert env.true_mean(15) == pytest.approx(0.75)


def test_bad_case_is_deterministic():
    env = BadCaseEnvironment(4, seed=3)
    assert [env.sample_reward(8) for _ in range(5)] == [0.75] * 5
    assert env.sample_at(1, 1) == pytest.approx(0.75)


def test_table_stores_means_verbatim():
    env = TableEnvironment([0.1, 0.7, 0.3, 0.2])
    assert env.depth_limit == 2
    assert env.true_mean(1) == 0.7
    assert env.node_reward_mean(1, 0) == 0.7
    assert env.node_reward_mean(0, 0) == 0.7
    assert env.optimal_value() == (0.7, (1,))


def test_leaf_means_are_read_only():
    env = BernoulliFunctionEnvironment(0.1, depth_limit=3)
    with pytest.raises(ValueError):
        env.leaf_means()[0] = 1.0


def test_degenerate_bernoulli_rewards():
    env = TableEnvironment([1.0, 0.0], seed=7)
    assert {env.sample_reward(0) for _ in range(50)} == {1.0}
    assert {env.sample_reward(1) for _ in range(50)} == {0.0}


def test_table_sample_mean():
    env = TableEnvironment([0.5, 0.5], seed=11)
    samples = [env.sample_reward(0) for _ in range(100_000)]
    assert set(samples) <= {0.0, 1.0}
    assert np.mean(samples) == pytest.approx(0.5, abs=0.01)


def test_seeded_reward_streams_are_identical():
    first = TableEnvironment([0.3, 0.6], seed=42)
    second = TableEnvironment([0.3, 0.6], seed=42)
    assert [first.sample_reward(1) for _ in range(200)] == [second.sample_reward(1) for _ in range(200)]


def test_sample_reward_rejects_invalid_leaf():
    env = TableEnvironment([0.3, 0.6])
    with pytest.raises(EnvironmentSpecError):
        env.sample_reward(2)


@pytest.mark.parametrize('means', [[0.1, 0.2, 0.3], [0.5], [0.1, 1.5], [0.1, float('nan')], [[0.1, 0.2]]])
def test_table_rejects_invalid_means(means):
    with pytest.raises(EnvironmentSpecError):
        TableEnvironment(means)


def test_table_from_json(tmp_path):
    path = tmp_path / 'means.json'
    path.write_text(json.dumps([0.1, 0.9, 0.4, 0.2]))
    env = TableEnvironment.from_json(path)
    assert env.optimal_value() == (0.9, (1,))

    broken = tmp_path / 'broken.json'
    broken.write_text('[0.1, ')
    with pytest.raises(EnvironmentSpecError):
        TableEnvironment.from_json(broken)
    with pytest.raises(EnvironmentSpecError):
        TableEnvironment.from_json(tmp_path / 'missing.json')


def test_make_environment():
    env = make_environment({'kind': 'bernoulli_function', 'a': 0.1}, 4, seed=1)
    assert isinstance(env, BernoulliFunctionEnvironment)
    assert env.leaf_count == 16
    assert isinstance(make_environment({'kind': 'bad_case'}, 3), BadCaseEnvironment)
    assert make_environment({'kind': 'table', 'means': [0.2, 0.4]}, None).depth_limit == 1


@pytest.mark.parametrize('spec, depth', [
    ({'kind': 'mystery'}, 3),
    ({'kind': 'bernoulli_function'}, 3),
    ({'kind': 'table'}, 3),
    ({'kind': 'table', 'means': [0.2, 0.4]}, 3),
    ({'kind': 'bad_case'}, None),
])
def test_make_environment_rejects_invalid_specs(spec, depth):
    with pytest.raises(EnvironmentSpecError):
        make_environment(spec, depth)
