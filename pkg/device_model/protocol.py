"""
Program/erase calibration protocol.

Every device of an array is programmed to the lowest and highest level
`cycles` times each, alternating all-'0' and all-'1' passes, and the
programmed conductance is read back after every program event.
"""
from typing import Iterable, List, Tuple

import numpy as np
import pandas as pd

from device_model.fefet import draw_d2d_offsets, program_conductances
from device_model.models.device_data import MEASUREMENT_COLUMNS, MacroModel, MeasurementRecord
from shared.errors import DomainError
from shared.rng import RngKey

DEFAULT_CYCLES = 100


def run_calibration_protocol(array_dims: Tuple[int, int], model: MacroModel,
                             key: RngKey, cycles: int = DEFAULT_CYCLES) -> pd.DataFrame:
    """
    Simulate the calibration protocol on a rows x cols array of single devices.

    Each device uses stream (key layer, row, col, 0). Its creation program
    (level 0) consumes key.event_counter; cycle k (1-based) then programs level
    0 at counter base + 2k - 1 and level L-1 at base + 2k.

    Args:
        array_dims: (rows, cols)
        model: Macro-model generating the conductances
        key: Seed and layer of the calibration array
        cycles: Repetitions per extreme level

    Returns:
        DataFrame with MEASUREMENT_COLUMNS, ordered by device, level, cycle;
        rows * cols * 2 * cycles records
    """
    rows, cols = array_dims
    if rows < 1 or cols < 1:
        raise DomainError(f"calibration array must be non-empty, got {rows}x{cols}")
    if cycles < 1:
        raise DomainError(f"cycles must be >= 1, got {cycles}")

    layer = key.stream[0]
    device_id = np.arange(rows * cols, dtype=np.int64)
    row, col = np.divmod(device_id, cols)
    d2d = draw_d2d_offsets(model, key.seed, layer, row, col, 0)

    # Axes: (device, level index, cycle)
    level_index = np.arange(2).reshape(1, 2, 1)
    cycle = np.arange(1, cycles + 1, dtype=np.int64).reshape(1, 1, cycles)
    target = np.where(level_index == 0, 0, model.max_level)
    counter = (key.event_counter + 2 * cycle - 1 + level_index).astype(np.uint64)

    shape = (rows * cols, 2, cycles)
    conductance = program_conductances(
        model,
        np.broadcast_to(target, shape),
        d2d.reshape(-1, 1, 1),
        key.seed,
        layer,
        row.reshape(-1, 1, 1),
        col.reshape(-1, 1, 1),
        0,
        counter,
    )

    return pd.DataFrame({
        'device_id': np.broadcast_to(device_id.reshape(-1, 1, 1), shape).ravel(),
        'row': np.broadcast_to(row.reshape(-1, 1, 1), shape).ravel(),
        'col': np.broadcast_to(col.reshape(-1, 1, 1), shape).ravel(),
        'target_level': np.broadcast_to(target, shape).ravel().astype(np.int64),
        'cycle': np.broadcast_to(cycle, shape).ravel(),
        'conductance_uS': np.broadcast_to(conductance, shape).ravel(),
    }, columns=MEASUREMENT_COLUMNS)


def records_to_frame(records: Iterable[MeasurementRecord]) -> pd.DataFrame:
    """Build a measurement table from MeasurementRecord values."""
    return pd.DataFrame(
        [(r.device_id, r.row, r.col, r.target_level, r.cycle, r.conductance_uS) for r in records],
        columns=MEASUREMENT_COLUMNS,
    ).astype({'device_id': 'int64', 'row': 'int64', 'col': 'int64',
              'target_level': 'int64', 'cycle': 'int64', 'conductance_uS': 'float64'})


def frame_to_records(frame: pd.DataFrame) -> List[MeasurementRecord]:
    """Row-wise view of a measurement table."""
    return [
        MeasurementRecord(int(d), int(r), int(c), int(t), int(k), float(g))
        for d, r, c, t, k, g in frame.loc[:, MEASUREMENT_COLUMNS].itertuples(index=False, name=None)
    ]
