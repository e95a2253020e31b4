import os

os.environ.setdefault('MPLBACKEND', 'Agg')

import numpy as np
import pytest

import operations_logger
from core_algebra import Potential
from graph_classifier import admissible_pairs, classify
from level_sets import solve_special_points

PT_A = 1j * np.sqrt(3.0)


@pytest.fixture(scope='session', autouse=True)
def isolated_dirs(tmp_path_factory):
    """Logs, ledger and cache go to a throwaway directory"""
    base = tmp_path_factory.mktemp('stokes')
    os.environ['STOKES_LOG_DIR'] = str(base / 'logs')
    os.environ['STOKES_CACHE_DIR'] = str(base / 'cache')
    operations_logger.run_ledger.log_file = base / 'logs' / 'run_ledger.json'
    yield base


@pytest.fixture(scope='session')
def pt_potential():
    return Potential(PT_A, np.pi / 4)


@pytest.fixture(scope='session')
def pt_graph(pt_potential):
    return classify(pt_potential, threads=2)


@pytest.fixture(scope='session')
def pt_descriptor(pt_graph):
    return next(d for d in admissible_pairs(pt_graph) if set(d.pair) == {0, 3})


@pytest.fixture(scope='session')
def type_a_graph():
    return classify(Potential(-2j, np.pi / 4), threads=2)


@pytest.fixture(scope='session')
def type_bb_graph():
    """Real a > 1 at theta = 0: [1, a] is short and the strip only touches it at z = 1"""
    return classify(Potential(2.0, 0.0), threads=2)


@pytest.fixture(scope='session')
def tree_graph():
    """The tree point t on the imaginary axis at theta = pi/4"""
    t_point = solve_special_points(np.pi / 4)['t_point']
    assert t_point is not None
    return classify(Potential(t_point, np.pi / 4), threads=2)
