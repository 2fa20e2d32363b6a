"""
Calibration file formats: measurement CSV and macro-model parameter file.
"""
import os

import numpy as np
import pandas as pd
import yaml

from device_model.models.device_data import MEASUREMENT_COLUMNS, MacroModel
from shared.csv_io import write_csv
from shared.errors import DomainError, FormatError

MEASUREMENT_HEADER = ','.join(MEASUREMENT_COLUMNS)
INTEGER_COLUMNS = ['device_id', 'row', 'col', 'target_level', 'cycle']

# Parameter-file key → MacroModel field, in file order.
MODEL_KEYS = {
    'g_off_uS': 'g_off',
    'g_on_uS': 'g_on',
    'levels': 'levels',
    'sigma_d2d_uS': 'sigma_d2d',
    'sigma_c2c_uS': 'sigma_c2c',
}

MAX_REPORTED_ROWS = 10


def parse_measurement_csv(path: str) -> pd.DataFrame:
    """
    Read a measurement CSV into a table with MEASUREMENT_COLUMNS.

    Args:
        path: File whose first line is exactly the measurement header

    Returns:
        DataFrame with integer id/level/cycle columns and float conductance

    Raises:
        FormatError: header mismatch, wrong field count, or non-numeric fields (with line numbers)
    """
    with open(path, 'r', encoding='utf-8', newline='') as f:
        lines = f.read().splitlines()
    header = lines[0] if lines else ''
    if header != MEASUREMENT_HEADER:
        raise FormatError(f"{path}: expected header '{MEASUREMENT_HEADER}', got '{header}'")

    body = pd.Series(lines[1:], index=pd.RangeIndex(2, len(lines) + 1), dtype=object)
    while len(body) and body.iat[-1] == '':
        body = body.iloc[:-1]
    fields = body.str.split(',')
    counts = fields.str.len().where(body != '', 0)
    wrong = counts != len(MEASUREMENT_COLUMNS)
    problems = [(int(line_no), f"expected {len(MEASUREMENT_COLUMNS)} fields, got {int(n)}")
                for line_no, n in counts[wrong].items()]

    good = fields[~wrong]
    text = pd.DataFrame(good.tolist(), index=good.index, columns=MEASUREMENT_COLUMNS, dtype=object)
    parsed = {}
    for column in MEASUREMENT_COLUMNS:
        values = pd.to_numeric(text[column], errors='coerce').to_numpy(dtype=np.float64)
        bad = ~np.isfinite(values)
        if column in INTEGER_COLUMNS:
            bad |= np.isfinite(values) & (np.mod(values, 1) != 0)
        for index in np.flatnonzero(bad):
            problems.append((int(text.index[index]), f"{column} is not a valid number: {text[column].iat[index]!r}"))
        parsed[column] = values

    if problems:
        problems.sort()
        shown = '; '.join(f"line {line_no}: {message}" for line_no, message in problems[:MAX_REPORTED_ROWS])
        more = f" (+{len(problems) - MAX_REPORTED_ROWS} more)" if len(problems) > MAX_REPORTED_ROWS else ''
        raise FormatError(f"{path}: malformed rows: {shown}{more}")

    result = pd.DataFrame(parsed, columns=MEASUREMENT_COLUMNS)
    return result.astype({**{c: 'int64' for c in INTEGER_COLUMNS}, 'conductance_uS': 'float64'})


def write_measurement_csv(frame: pd.DataFrame, path: str) -> str:
    return write_csv(frame, path, MEASUREMENT_COLUMNS)


def export_macro_model(model: MacroModel, path: str) -> str:
    """Write the five macro-model parameters, one `key: value` per line."""
    data = {key: getattr(model, field) for key, field in MODEL_KEYS.items()}
    data['levels'] = int(data['levels'])
    for key in MODEL_KEYS:
        if key != 'levels':
            data[key] = float(data[key])
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        yaml.safe_dump(data, f, sort_keys=False, default_flow_style=False)
    return path


def import_macro_model(path: str) -> MacroModel:
    """
    Read a macro-model parameter file.

    Raises:
        FormatError: unparsable file, unknown or missing keys, wrong value types
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        where = f" at line {mark.line + 1}" if mark is not None else ''
        raise FormatError(f"{path}: not a valid parameter file{where}: {e}") from None

    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected one 'key: value' per line")
    unknown = [k for k in data if k not in MODEL_KEYS]
    if unknown:
        raise FormatError(f"{path}: unknown key '{unknown[0]}'")
    missing = [k for k in MODEL_KEYS if k not in data]
    if missing:
        raise FormatError(f"{path}: missing key '{missing[0]}'")

    values = {}
    for key, field in MODEL_KEYS.items():
        value = data[key]
        if key == 'levels':
            if isinstance(value, bool) or not isinstance(value, int):
                raise FormatError(f"{path}: levels must be an integer, got {value!r}")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise FormatError(f"{path}: {key} must be a decimal number, got {value!r}")
        else:
            value = float(value)
        values[field] = value
    try:
        return MacroModel(**values)
    except DomainError as e:
        raise FormatError(f"{path}: {e}") from None
