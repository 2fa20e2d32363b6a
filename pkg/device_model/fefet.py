"""
FeFET macro-model operations.

Scalar operations act on single FeFETCell values; the vectorised helpers below
them implement the same formulas over numpy grids and are what the crossbar
uses. Variation is additive Gaussian on conductance: a per-device D2D offset
drawn once at creation plus a fresh C2C term at every program event.
"""
import math
import operator
from typing import Tuple

import numpy as np

from device_model.models.device_data import FeFETCell, MacroModel
from shared.errors import DomainError
from shared.rng import PURPOSE_C2C, PURPOSE_D2D, RngKey, keyed_normal


def _check_level(model: MacroModel, level) -> int:
    try:
        level = operator.index(level)
    except TypeError:
        raise DomainError(f"level must be an integer, got {level!r}") from None
    if not 0 <= level <= model.max_level:
        raise DomainError(f"level {level} outside [0, {model.max_level}]")
    return level


def level_to_conductance(model: MacroModel, level: int) -> float:
    """Ideal conductance (µS) of a level on the linear map g_off → g_on."""
    level = _check_level(model, level)
    return model.g_off + level * model.level_step


def conductance_to_level(model: MacroModel, g: float) -> int:
    """
    Nearest level for a conductance, ties rounding up; saturates outside [g_off, g_on].

    Raises:
        DomainError: g is not finite or not positive
    """
    if not math.isfinite(g):
        raise DomainError(f"conductance must be finite, got {g!r}")
    if g <= 0:
        raise DomainError(f"conductance must be positive, got {g!r}")
    return int(conductances_to_levels(model, np.asarray(g, dtype=np.float64)))


def conductances_to_levels(model: MacroModel, g: np.ndarray) -> np.ndarray:
    """Vectorised conductance_to_level; callers validate finiteness."""
    position = np.floor((np.asarray(g, dtype=np.float64) - model.g_off) / model.level_step + 0.5)
    return np.clip(position, 0, model.max_level).astype(np.int64)


def levels_to_conductances(model: MacroModel, levels: np.ndarray) -> np.ndarray:
    """Vectorised level_to_conductance; callers validate the level range."""
    return model.g_off + np.asarray(levels, dtype=np.float64) * model.level_step


def draw_d2d_offsets(model: MacroModel, seed: int, layer, row, col, pair) -> np.ndarray:
    """Fixed per-device offsets ~ Normal(0, sigma_d2d), keyed by device stream only."""
    shape = np.broadcast_shapes(np.shape(layer), np.shape(row), np.shape(col), np.shape(pair))
    if model.sigma_d2d == 0:
        return np.zeros(shape)
    return model.sigma_d2d * keyed_normal(seed, layer, row, col, pair, 0, PURPOSE_D2D)


def program_conductances(model: MacroModel, levels, d2d_offsets, seed: int,
                         layer, row, col, pair, event_counter) -> np.ndarray:
    """Conductance after programming: max(clamp, ideal + d2d + Normal(0, sigma_c2c))."""
    g = levels_to_conductances(model, levels) + d2d_offsets
    if model.sigma_c2c > 0:
        g = g + model.sigma_c2c * keyed_normal(seed, layer, row, col, pair, event_counter, PURPOSE_C2C)
    return np.maximum(g, model.g_min_clamp)


def create_cell(model: MacroModel, key: RngKey) -> FeFETCell:
    """New device with a fresh D2D offset, programmed once at level 0 using key's event counter."""
    layer, row, col, pair = key.stream
    d2d = float(draw_d2d_offsets(model, key.seed, layer, row, col, pair))
    cell = FeFETCell(level=0, d2d_offset=d2d, g_programmed=model.g_off, program_events=key.event_counter)
    return program_cell(cell, model, 0, key)


def program_cell(cell: FeFETCell, model: MacroModel, target_level: int, key: RngKey) -> FeFETCell:
    """
    Program a device to target_level with one C2C draw keyed by key.

    The returned cell's program_events is key.event_counter + 1, i.e. the next
    unused counter for this device's stream.
    """
    target_level = _check_level(model, target_level)
    layer, row, col, pair = key.stream
    g = float(program_conductances(model, target_level, cell.d2d_offset, key.seed,
                                   layer, row, col, pair, key.event_counter))
    return FeFETCell(
        level=target_level,
        d2d_offset=cell.d2d_offset,
        g_programmed=g,
        program_events=key.event_counter + 1,
    )


def apply_pulses(cell: FeFETCell, model: MacroModel, pulses: int, key: RngKey) -> Tuple[FeFETCell, int]:
    """
    Move a device by a signed pulse count, clamped to the level range.

    Any nonzero pulse count reprograms the device once (one C2C draw), even
    if every pulse was clamped away.

    Returns:
        (updated cell, pulses actually absorbed)
    """
    try:
        pulses = operator.index(pulses)
    except TypeError:
        raise DomainError(f"pulses must be an integer, got {pulses!r}") from None
    if pulses == 0:
        return cell, 0
    new_level = min(max(cell.level + pulses, 0), model.max_level)
    absorbed = new_level - cell.level
    return program_cell(cell, model, new_level, key), absorbed
