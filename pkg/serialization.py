"""
Serialization
JSON for structures, CSV for tables, scenario files and the textual forms of
complex numbers and angles used on the command line.
"""
import ast
import json
import logging
import operator
import re
from pathlib import Path
from typing import Dict, Iterable, List

import numpy as np
import pandas as pd

from settings import CLI
from stokes_errors import InvalidData

logger = logging.getLogger(__name__)

SCENARIO_KEYS = {
    'a', 'theta', 'n_range', 'window', 'tol', 'threads', 'seeds', 'alpha', 'x', 'n', 'resolution',
    'kind', 'seed', 'direction', 'pair', 'out',
}

_MANTISSA = r'(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?'

_COMPLEX = re.compile(
    rf'^\s*(?P<re>[+-]?{_MANTISSA})?'
    rf'\s*(?P<im>[+-]\s*({_MANTISSA})?[ij])?\s*$'
)

_IMAGINARY = re.compile(rf'^\s*(?P<im>[+-]?({_MANTISSA})?[ij])\s*$')

_OPERATORS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def parse_complex(text) -> complex:
    """
    Parse 're+imi' literals ('0+1.7320508i', '2', '2i', '-0.5i', '1e-3-2i')

    Raises:
        InvalidData on anything else
    """
    if isinstance(text, (int, float, complex)):
        return complex(text)
    if isinstance(text, (list, tuple)) and len(text) == 2:
        return complex(float(text[0]), float(text[1]))
    match = _IMAGINARY.match(str(text)) or _COMPLEX.match(str(text))
    if not match or not (match.groupdict().get('re') or match.group('im')):
        raise InvalidData(f"cannot parse complex number {text!r}; expected re+imi")
    real = float(match.group('re')) if match.groupdict().get('re') else 0.0
    imag = 0.0
    if match.group('im'):
        body = match.group('im').replace(' ', '')[:-1]
        imag = float(body + '1') if body in ('', '+', '-') else float(body)
    return complex(real, imag)


def _evaluate(node):
    if isinstance(node, ast.Expression):
        return _evaluate(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == 'pi':
        return np.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _OPERATORS:
        return _OPERATORS[type(node.op)](_evaluate(node.left), _evaluate(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPERATORS:
        return _OPERATORS[type(node.op)](_evaluate(node.operand))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == 'arctan' \
            and len(node.args) == 1:
        return float(np.arctan(_evaluate(node.args[0])))
    raise InvalidData(f"unsupported angle expression: {ast.dump(node)}")


def parse_angle(text) -> float:
    """Angles in radians: '0.785', 'pi/4', '7*pi/12', 'arctan(0.5)/2'"""
    if isinstance(text, (int, float)):
        return float(text)
    try:
        tree = ast.parse(str(text).strip(), mode='eval')
    except SyntaxError as e:
        raise InvalidData(f"cannot parse angle {text!r}: {e}") from e
    try:
        return float(_evaluate(tree))
    except ZeroDivisionError as e:
        raise InvalidData(f"cannot parse angle {text!r}: division by zero") from e


def parse_range(text) -> List[int]:
    """'1..8', '3,5,7' or a list"""
    if isinstance(text, (list, tuple)):
        return [int(n) for n in text]
    text = str(text).strip()
    if '..' in text:
        lo, hi = text.split('..', 1)
        return list(range(int(lo), int(hi) + 1))
    try:
        return [int(n) for n in text.split(',') if n.strip()]
    except ValueError as e:
        raise InvalidData(f"cannot parse index range {text!r}") from e


def load_scenario(path) -> Dict:
    """
    Read a JSON scenario file

    Raises:
        InvalidData for unreadable files and unknown keys
    """
    path = Path(path)
    try:
        with open(path, 'r') as f:
            scenario = json.load(f)
    except (OSError, ValueError) as e:
        raise InvalidData(f"cannot read scenario {path}: {e}") from e
    if not isinstance(scenario, dict):
        raise InvalidData(f"scenario {path} must be a JSON object")
    unknown = sorted(set(scenario) - SCENARIO_KEYS)
    if unknown:
        raise InvalidData(f"unknown scenario keys in {path}: {unknown}")
    tol = scenario.get('tol')
    if tol is not None and not float(tol) > 0:
        raise InvalidData(f"tolerance must be positive, got {tol}")
    return scenario


def _json_default(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(payload: Dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='\n') as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
        f.write('\n')
    logger.info(f"Wrote {path}")
    return path


def records_frame(records: Iterable[Dict]) -> pd.DataFrame:
    """Records to a DataFrame with complex values split into _re/_im columns"""
    rows = []
    for record in records:
        row = {}
        for key, value in record.items():
            if isinstance(value, complex):
                row[f"{key}_re"], row[f"{key}_im"] = value.real, value.imag
            else:
                row[key] = value
        rows.append(row)
    return pd.DataFrame(rows)


def write_table(records, path, float_format: str = None) -> Path:
    """Write records (or a DataFrame) as RFC-4180 CSV with a fixed float format"""
    frame = records if isinstance(records, pd.DataFrame) else records_frame(records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=float_format or CLI['float_format'], lineterminator='\r\n')
    logger.info(f"Wrote {len(frame)} row(s) to {path}")
    return path
