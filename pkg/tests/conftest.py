"""Shared fixtures: bundled problems, seeded generators and tiny hand-built problems"""

import numpy as np
import pytest

from sdyna.fmdp.model import ProblemSpec, Variable, validate_spec
from sdyna.fmdp.problems import load_bundled
from sdyna.trees.decision_tree import Leaf, Node


@pytest.fixture(autouse=True)
def isolated_dirs(tmp_path, monkeypatch):
    """Keep settings, profiles and the log file out of the home directory"""
    monkeypatch.setenv('SDYNA_CONFIG_DIR', str(tmp_path / 'config'))
    monkeypatch.setenv('SDYNA_CACHE_DIR', str(tmp_path / 'cache'))


@pytest.fixture(scope='session')
def coffee():
    return load_bundled('coffee')


@pytest.fixture(scope='session')
def process():
    return load_bundled('process')


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def single_variable_spec(cpd, reward, terminal=Leaf(False), discount=0.9, name='tiny'):
    """One binary variable x and one action 'a'"""
    return validate_spec(ProblemSpec(
        name=name,
        variables=(Variable('x'),),
        actions=('a',),
        transitions=((cpd,),),
        reward=reward,
        terminal=terminal,
        discount=discount,
    ))


@pytest.fixture
def coin_spec():
    """x' is a fair coin, no reward"""
    return single_variable_spec(Leaf((0.5, 0.5)), Leaf(0.0))


@pytest.fixture
def absorbing_spec():
    """x' is always true; reward 1 whenever x is true"""
    return single_variable_spec(Leaf((0.0, 1.0)), Node(0, (Leaf(0.0), Leaf(1.0))))
