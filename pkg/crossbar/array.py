"""
Differential-pair FeFET crossbar.

Synapse (i, j) is a pair of devices: pair index 0 (plus) and 1 (minus). The
effective weight is (g⁺ - g⁻) / (g_on - g_off). In binary mode a +1 weight is
(level⁺, level⁻) = (L-1, 0) and a -1 weight is (0, L-1). In multilevel mode a
synapse holds a signed level k in [-(L-1), L-1], realised as (k, 0) for k >= 0
and (0, -k) otherwise.

Reads are noiseless; variation enters only when a device is programmed.
"""
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from device_model.fefet import draw_d2d_offsets, program_conductances
from device_model.models.device_data import FeFETCell, MacroModel
from shared.csv_io import write_csv
from shared.errors import DomainError
from shared.rng import RngKey

PLUS = 0
MINUS = 1

DUMP_COLUMNS = ['row', 'col', 'pair', 'level', 'g_programmed_uS']


def check_sign_matrix(w: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    """Validate a SignMatrix (entries in {+1, -1}) of the given shape."""
    w = np.asarray(w)
    if w.shape != shape:
        raise DomainError(f"sign matrix shape {w.shape} does not match array {shape}")
    if not np.all((w == 1) | (w == -1)):
        raise DomainError("sign matrix entries must be +1 or -1")
    return w.astype(np.int8)


def _check_vector(v: np.ndarray, length: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim not in (1, 2) or v.shape[-1] != length:
        raise DomainError(f"{name} must have trailing length {length}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} must be finite")
    return v


def vmm_forward_weights(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Column currents y[j] = sum_i W[i, j] x[i]; x may be a (batch, rows) matrix."""
    x = _check_vector(x, weights.shape[0], "input vector")
    return x @ weights


def vmm_backward_weights(weights: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Transposed read r[i] = sum_j W[i, j] delta[j]; delta may be (batch, cols)."""
    delta = _check_vector(delta, weights.shape[1], "delta vector")
    return delta @ weights.T


class CrossbarArray:
    """Grid of differential FeFET pairs realising a signed weight matrix."""

    def __init__(self, rows: int, cols: int, model: MacroModel, seed: int, layer: int,
                 levels: np.ndarray, d2d_offsets: np.ndarray, conductances: np.ndarray,
                 program_events: np.ndarray):
        self.rows = rows
        self.cols = cols
        self.model = model
        self.seed = seed
        self.layer = layer
        # All grids are (pair, row, col).
        self.levels = levels
        self.d2d_offsets = d2d_offsets
        self.conductances = conductances
        self.program_events = program_events
        self._snapshot: Optional[np.ndarray] = None

    @classmethod
    def build(cls, rows: int, cols: int, model: MacroModel, key: RngKey) -> "CrossbarArray":
        """
        Create an array with fresh D2D offsets and every weight programmed to -1.

        The array's devices use streams (key layer, row, col, pair); the initial
        program event consumes key.event_counter.
        """
        if rows < 1 or cols < 1:
            raise DomainError(f"crossbar dimensions must be >= 1, got {rows}x{cols}")
        layer = key.stream[0]
        pair, row, col = np.indices((2, rows, cols))
        d2d = draw_d2d_offsets(model, key.seed, layer, row, col, pair)
        levels = np.where(pair == PLUS, 0, model.max_level).astype(np.int64)
        events = np.full((2, rows, cols), key.event_counter, dtype=np.uint64)
        conductances = program_conductances(model, levels, d2d, key.seed, layer, row, col, pair, events)
        return cls(rows, cols, model, key.seed, layer, levels, d2d, conductances, events + np.uint64(1))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def cell(self, pair: int, row: int, col: int) -> FeFETCell:
        """Device view of one grid position."""
        return FeFETCell(
            level=int(self.levels[pair, row, col]),
            d2d_offset=float(self.d2d_offsets[pair, row, col]),
            g_programmed=float(self.conductances[pair, row, col]),
            program_events=int(self.program_events[pair, row, col]),
        )

    def signs(self) -> np.ndarray:
        """SignMatrix mirroring the programmed levels."""
        return np.where(self.levels[PLUS] > self.levels[MINUS], 1, -1).astype(np.int8)

    def signed_levels(self) -> np.ndarray:
        """Signed level index k = level⁺ - level⁻ per synapse."""
        return self.levels[PLUS] - self.levels[MINUS]

    def _program(self, targets: np.ndarray) -> int:
        """Reprogram every device whose level differs from targets; returns program events."""
        mask = targets != self.levels
        pair, row, col = np.nonzero(mask)
        if pair.size == 0:
            return 0
        counters = self.program_events[pair, row, col]
        self.conductances[pair, row, col] = program_conductances(
            self.model, targets[pair, row, col], self.d2d_offsets[pair, row, col],
            self.seed, self.layer, row, col, pair, counters,
        )
        self.program_events[pair, row, col] = counters + np.uint64(1)
        self.levels[pair, row, col] = targets[pair, row, col]
        self._snapshot = None
        return int(pair.size)

    def program_weight_matrix(self, w: np.ndarray) -> int:
        """
        Program a SignMatrix; only devices of synapses whose sign changes are touched.

        Returns:
            Number of device program events (2 per flipped synapse)
        """
        w = check_sign_matrix(w, self.shape)
        top = self.model.max_level
        targets = np.stack([np.where(w > 0, top, 0), np.where(w > 0, 0, top)])
        return self._program(targets)

    def apply_signed_pulses(self, pulses: np.ndarray) -> Tuple[np.ndarray, int]:
        """
        Move each synapse's signed level by a pulse count, clamped to [-(L-1), L-1].

        Per-device pulse counts follow from the target pair levels; devices whose
        count is zero are not pulsed.

        Returns:
            (absorbed signed level steps per synapse, device program events)
        """
        pulses = np.asarray(pulses)
        if pulses.shape != self.shape:
            raise DomainError(f"pulse matrix shape {pulses.shape} does not match array {self.shape}")
        top = self.model.max_level
        current = self.signed_levels()
        target = np.clip(current + pulses.astype(np.int64), -top, top)
        targets = np.stack([np.maximum(target, 0), np.maximum(-target, 0)])
        events = self._program(targets)
        return target - current, events

    def effective_weights(self) -> np.ndarray:
        """Read-only W_eff snapshot; recomputed only after devices are reprogrammed."""
        if self._snapshot is None:
            snapshot = (self.conductances[PLUS] - self.conductances[MINUS]) / self.model.window
            snapshot.setflags(write=False)
            self._snapshot = snapshot
        return self._snapshot

    def vmm_forward(self, x: np.ndarray) -> np.ndarray:
        return vmm_forward_weights(self.effective_weights(), x)

    def vmm_backward(self, delta: np.ndarray) -> np.ndarray:
        return vmm_backward_weights(self.effective_weights(), delta)

    def dump_frame(self) -> pd.DataFrame:
        """Per-device state, one row per device in (row, col, pair) order."""
        row, col, pair = np.indices((self.rows, self.cols, 2))
        return pd.DataFrame({
            'row': row.ravel(),
            'col': col.ravel(),
            'pair': pair.ravel(),
            'level': self.levels.transpose(1, 2, 0).ravel(),
            'g_programmed_uS': self.conductances.transpose(1, 2, 0).ravel(),
        }, columns=DUMP_COLUMNS)

    def dump_csv(self, path: str) -> str:
        return write_csv(self.dump_frame(), path, DUMP_COLUMNS)


def weights_from_dump(frame: pd.DataFrame, model: MacroModel) -> np.ndarray:
    """Rebuild W_eff from a per-device dump of one array."""
    missing = [c for c in DUMP_COLUMNS if c not in frame.columns]
    if missing:
        raise DomainError(f"array dump is missing columns {missing}")
    rows = int(frame['row'].max()) + 1
    cols = int(frame['col'].max()) + 1
    g = np.full((2, rows, cols), np.nan)
    g[frame['pair'].to_numpy(), frame['row'].to_numpy(), frame['col'].to_numpy()] = \
        frame['g_programmed_uS'].to_numpy(dtype=np.float64)
    if np.isnan(g).any():
        raise DomainError(f"array dump does not cover all {rows}x{cols} synapse pairs")
    return (g[PLUS] - g[MINUS]) / model.window
