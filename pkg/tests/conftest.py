# -*- coding: utf-8 -*-
"""Fixtures comunes de las pruebas"""

import pytest

from lib.environments import TableEnvironment
from lib.logger import reset_loggers
from lib.policies import PolicyConfig, SmoothnessSeq

# Tabla de profundidad 3 que cumple A* con δ_d = 2^{-d}
SMOOTH_TABLE = [0.2, 0.3, 0.4, 0.35, 0.5, 0.45, 0.8, 0.7]


@pytest.fixture(autouse=True)
def clean_loggers():
    yield
    reset_loggers()


@pytest.fixture
def smooth_table():
    return TableEnvironment(SMOOTH_TABLE, seed=0)


@pytest.fixture
def halving_smoothness():
    return SmoothnessSeq('exponential', delta=1.0, gamma=0.5)


@pytest.fixture
def bast_policy(halving_smoothness):
    return PolicyConfig('bast', beta=0.1, depth_limit=3, smoothness=halving_smoothness)
