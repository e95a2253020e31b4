import json

import numpy as np
import pandas as pd
import pytest

from serialization import (
    load_scenario, parse_angle, parse_complex, parse_range, records_frame, write_json, write_table,
)
from stokes_errors import InvalidData


@pytest.mark.parametrize('text, expected', [
    ('0+1.7320508i', 1.7320508j),
    ('2', 2 + 0j),
    ('-0.5i', -0.5j),
    ('1e-3-2i', 0.001 - 2j),
    ('-i', -1j),
    ('3 + 4j', 3 + 4j),
    ('2i', 2j),
    ('i', 1j),
    ('+i', 1j),
    ('2.5e-1j', 0.25j),
    ([1.0, -2.0], 1 - 2j),
    (0.25, 0.25 + 0j),
])
def test_parse_complex(text, expected):
    assert parse_complex(text) == pytest.approx(expected)


@pytest.mark.parametrize('text', ['abc', '', '1+', '2i3', 'ii', 'e5i', '2i+1'])
def test_parse_complex_rejects_garbage(text):
    with pytest.raises(InvalidData):
        parse_complex(text)


@pytest.mark.parametrize('text, expected', [
    ('pi/4', np.pi / 4),
    ('7*pi/12', 7 * np.pi / 12),
    ('arctan(0.5)/2', np.arctan(0.5) / 2),
    ('-pi', -np.pi),
    ('0.785', 0.785),
    (1, 1.0),
])
def test_parse_angle(text, expected):
    assert parse_angle(text) == pytest.approx(expected)


@pytest.mark.parametrize('text', ['import os', '__import__("os")', '1/0', 'e**2', 'pi +'])
def test_parse_angle_is_restricted(text):
    with pytest.raises(InvalidData):
        parse_angle(text)


def test_parse_range():
    assert parse_range('1..4') == [1, 2, 3, 4]
    assert parse_range('3,5') == [3, 5]
    assert parse_range([2, 7]) == [2, 7]
    with pytest.raises(InvalidData):
        parse_range('one')


def test_load_scenario(tmp_path):
    good = tmp_path / 'good.json'
    good.write_text(json.dumps({'a': '0+1.7320508i', 'theta': 'pi/4', 'tol': 1e-9}))
    assert load_scenario(good)['theta'] == 'pi/4'

    unknown = tmp_path / 'unknown.json'
    unknown.write_text(json.dumps({'a': 1, 'colour': 'red'}))
    with pytest.raises(InvalidData, match='colour'):
        load_scenario(unknown)

    negative = tmp_path / 'negative.json'
    negative.write_text(json.dumps({'tol': -1}))
    with pytest.raises(InvalidData):
        load_scenario(negative)

    listed = tmp_path / 'list.json'
    listed.write_text('[1, 2]')
    with pytest.raises(InvalidData):
        load_scenario(listed)

    with pytest.raises(InvalidData):
        load_scenario(tmp_path / 'missing.json')


def test_write_json_handles_complex_and_numpy(tmp_path):
    path = write_json({'z': 1 + 2j, 'v': np.arange(3), 'x': np.float64(0.5)}, tmp_path / 'out' / 'a.json')
    assert json.loads(path.read_text()) == {'v': [0, 1, 2], 'x': 0.5, 'z': [1.0, 2.0]}


def test_write_table_splits_complex_columns(tmp_path):
    records = [{'n': 1, 'z': 0.5 - 1j}, {'n': 2, 'z': 1.0 / 3.0 + 0j}]
    frame = records_frame(records)
    assert list(frame.columns) == ['n', 'z_re', 'z_im']
    path = write_table(records, tmp_path / 't.csv')
    raw = path.read_bytes()
    assert raw.count(b'\r\n') == 3
    assert b'0.333333333333' in raw
    again = pd.read_csv(path)
    assert again['z_im'].tolist() == [-1.0, 0.0]
