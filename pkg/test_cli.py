import copy
import json

import numpy as np
import pandas as pd
import pytest

import operations_logger
import settings
from core_algebra import Potential
from hdf5_cache import ResultCache, scenario_key
from operations_logger import RunLedger
from plots import plot_spectrum
from settings import apply_tolerance, get_settings
from stokes_cli import build_parser, main
from trajectory_tracer import TraceLimits

PT_ARGS = ['--a', '0+1.7320508075688772i', '--theta', 'pi/4']


def run(tmp_path, *argv):
    return main(['--out', str(tmp_path), '--no-cache', '--log-level', 'WARNING', *argv])


def test_parser_rejects_unknown_flags():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(['classify', '--bogus'])
    assert info.value.code == 64
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args([])
    assert info.value.code == 64


def test_fixed_turning_point_is_a_usage_error(tmp_path):
    assert run(tmp_path, 'classify', '--a', '1', '--theta', '0') == 64
    assert run(tmp_path, 'classify', '--a', 'one') == 64
    assert run(tmp_path, 'classify') == 64


def test_bad_global_options(tmp_path, capsys):
    assert run(tmp_path, '--tol', '0', 'classify', '--a', '2i') == 64
    assert 'tolerance must be positive' in capsys.readouterr().err
    assert run(tmp_path, '--threads', '0', 'classify', '--a', '2i') == 64
    assert '--threads must be positive' in capsys.readouterr().err
    scenario = tmp_path / 'scenario.json'
    scenario.write_text(json.dumps({'a': '2i', 'flavour': 'x'}))
    assert run(tmp_path, '--seed-file', str(scenario), 'classify') == 64
    assert 'flavour' in capsys.readouterr().err


def test_trace_needs_a_direction_off_the_turning_points(tmp_path, capsys):
    assert run(tmp_path, 'trace', '--a', '2i', '--seed', '3+3i') == 64
    err = capsys.readouterr().err
    assert '--direction is required' in err
    assert 'cannot parse' not in err


def test_tolerance_flag_does_not_leak_into_module_settings(tmp_path):
    before = (copy.deepcopy(settings.TRACER), copy.deepcopy(settings.QUADRATURE))
    run(tmp_path, '--tol', '1e-3', 'classify', '--a', '0-2i', '--theta', 'pi/4')
    assert (settings.TRACER, settings.QUADRATURE) == before


def test_tolerance_reaches_the_trace_limits():
    pot = Potential(-2j, np.pi / 4)
    overridden = apply_tolerance(get_settings(), 1e-12)
    limits = TraceLimits.from_settings(pot, overridden)
    assert limits.short_tol == 1e-12
    assert limits.quadrature['rel_tol'] == 1e-12
    assert TraceLimits.from_settings(pot, get_settings()).short_tol == settings.TRACER['short_tol']


def test_trace_writes_points(tmp_path):
    assert run(tmp_path, 'trace', '--a', '2i', '--theta', '0.3', '--seed', '3+3i', '--direction', '0') == 0
    payload = json.loads((tmp_path / 'trace.json').read_text())
    assert payload['start_tp'] is None
    assert payload['terminal']['kind'] in ('escaped', 'hit_turning_point', 'arc_length_cap')
    table = pd.read_csv(tmp_path / 'trace.csv')
    assert list(table.columns) == ['re', 'im']
    assert len(table) == len(payload['points'])


def test_classify_pt(tmp_path):
    assert run(tmp_path, 'classify', *PT_ARGS) == 0
    payload = json.loads((tmp_path / 'classify.json').read_text())
    assert payload['type_label'] == 'B'
    problems = payload['eigenvalue_problems']
    by_pair = {tuple(sorted(p['pair'])): p for p in problems}
    assert by_pair[(0, 3)]['accumulation']['accumulates'] is True
    assert (tmp_path / 'classify.svg').read_text().lstrip().startswith('<?xml')


@pytest.mark.slow
def test_zeros_writes_the_eigenfunction_field(tmp_path):
    assert run(tmp_path, 'zeros', *PT_ARGS, '--n', '1', '--window=-2,2,-1,1.5') == 0
    field = pd.read_csv(tmp_path / 'zeros_field.csv')
    assert list(field.columns) == ['re', 'im', 'log_abs_f']
    resolution = settings.CLI['field_resolution']
    assert len(field) == resolution ** 2
    assert field['re'].min() == pytest.approx(-2.0) and field['im'].max() == pytest.approx(1.5)
    assert np.isfinite(field['log_abs_f']).all()


def test_scenario_supplies_defaults(tmp_path):
    scenario = tmp_path / 'scenario.json'
    scenario.write_text(json.dumps({'a': '0+1.7320508075688772i', 'theta': 'pi/4', 'n_range': '1..3'}))
    assert run(tmp_path, '--seed-file', str(scenario), 'spectrum', '--quantization-only') == 0
    table = pd.read_csv(tmp_path / 'spectrum.csv')
    assert table['n'].tolist() == [1, 2, 3]
    ratios = table['quantization'] / table['quantization'].iloc[0]
    assert ratios.tolist() == pytest.approx([1.0, 3.0, 5.0])
    assert b'\r\n' in (tmp_path / 'spectrum.csv').read_bytes()


def test_type_a_has_no_spectrum(tmp_path):
    assert run(tmp_path, 'spectrum', '--a', '0-2i', '--theta', 'pi/4', '--quantization-only') == 3
    payload = json.loads((tmp_path / 'spectrum.json').read_text())
    assert payload['type_label'] == 'A'
    assert payload['error']['error'] == 'NotAccumulating'


def test_runs_are_recorded_in_the_ledger(tmp_path):
    before = len(operations_logger.run_ledger.recent_runs())
    run(tmp_path, 'classify', '--a', '-1')
    runs = operations_logger.run_ledger.recent_runs()
    assert len(runs) == before + 1
    assert runs[-1]['command'] == 'classify'
    assert runs[-1]['exit_code'] == 64
    assert runs[-1]['status'] == 'error'


def test_ledger_summary(tmp_path):
    ledger = RunLedger(tmp_path / 'ledger.json')
    ledger.log_run('classify', {'a': '2i'}, 'success', 0, 1.5)
    ledger.log_run('sigma', {'theta': '0'}, 'error', 1, 0.5)
    ledger.log_run('sigma', {}, 'bogus', 0)
    summary = ledger.daily_summary()
    assert summary['total_runs'] == 3
    assert summary['by_command'] == {'classify': 1, 'sigma': 2}
    assert summary['by_status']['info'] == 1
    assert summary['total_seconds'] == pytest.approx(2.0)


def test_result_cache(tmp_path):
    cache = ResultCache(tmp_path / 'cache')
    scenario = {'theta': 0.5, 'n': [1, 2]}
    assert cache.load('sigma', scenario) is None
    key = cache.store('sigma', scenario, {'n_regions': 9}, {'curve_0': np.eye(2)})
    assert key == scenario_key({'command': 'sigma', **scenario})
    payload, arrays = cache.load('sigma', {'n': [1, 2], 'theta': 0.5})
    assert payload == {'n_regions': 9}
    assert np.array_equal(arrays['curve_0'], np.eye(2))
    cache.store('sigma', scenario, {'n_regions': 10})
    assert cache.load('sigma', scenario)[0] == {'n_regions': 10}
    assert cache.get_statistics()['by_command'] == {'sigma': 1}


def test_plot_spectrum_writes_svg(tmp_path):
    table = pd.DataFrame({'n': [1, 2, 3], 'quantization': [0.7, 2.2, 3.7], 'oracle': [np.nan] * 3})
    path = plot_spectrum(table, ['quantization', 'oracle', 'missing'], tmp_path / 'spectrum.svg')
    assert path.exists()
    assert '<svg' in path.read_text()


@pytest.mark.slow
def test_sturm_command(tmp_path):
    assert run(tmp_path, 'sturm', '--alpha', '0', '--n-range', '1..3') == 0
    table = pd.read_csv(tmp_path / 'sturm.csv')
    assert table['e_oracle_re'].iloc[0] == pytest.approx(1.1562670719881, rel=1e-6)
    assert (tmp_path / 'sturm.svg').exists()
