"""
Gaussian variation fitting.

Conductance readings are split with a one-way random-effects decomposition:
D2D is the spread of per-device means around the level mean, C2C is the
spread of a device's readings around its own mean. All standard deviations
are unbiased (n - 1).
"""
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from device_model.models.device_data import MEASUREMENT_COLUMNS, MacroModel, MeasurementRecord
from device_model.protocol import records_to_frame
from shared.errors import DomainError

FITTED_STATS_COLUMNS = ['scope', 'mean_uS', 'sigma_d2d_uS', 'sigma_c2c_uS', 'n_devices', 'n_records']


@dataclass(frozen=True)
class LevelStats:
    level: int
    mean: float
    sigma_d2d: float
    sigma_c2c: float
    n_devices: int
    n_records: int


@dataclass(frozen=True)
class FittedStats:
    """Per-level estimates plus the pooled sigmas used for the macro-model."""
    per_level: Dict[int, LevelStats]
    sigma_d2d: float
    sigma_c2c: float
    n_devices: int
    n_records: int

    def to_frame(self) -> pd.DataFrame:
        rows = [
            (f"level_{s.level}", s.mean, s.sigma_d2d, s.sigma_c2c, s.n_devices, s.n_records)
            for s in (self.per_level[level] for level in sorted(self.per_level))
        ]
        rows.append(('pooled', np.nan, self.sigma_d2d, self.sigma_c2c, self.n_devices, self.n_records))
        return pd.DataFrame(rows, columns=FITTED_STATS_COLUMNS)


def fit_gaussian(samples: Sequence[float]) -> Tuple[float, float]:
    """
    Sample mean and unbiased standard deviation.

    Raises:
        DomainError: fewer than 2 samples
    """
    values = np.asarray(samples, dtype=np.float64)
    if values.size < 2:
        raise DomainError(f"need at least 2 samples for a Gaussian fit, got {values.size}")
    return float(values.mean()), float(values.std(ddof=1))


def _std_or_zero(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1)) if values.size >= 2 else 0.0


def fit_variation_model(records: Union[pd.DataFrame, Iterable[MeasurementRecord]],
                        levels: Optional[int] = None) -> Tuple[FittedStats, MacroModel]:
    """
    Fit g_off, g_on and pooled D2D/C2C sigmas from extreme-level readings.

    Args:
        records: Measurement table (MEASUREMENT_COLUMNS) or MeasurementRecord values
        levels: Level count L; inferred as max(target_level) + 1 when omitted

    Returns:
        (FittedStats, MacroModel built from the grand means and pooled sigmas)

    Raises:
        DomainError: an extreme level has no records, or a device/level has fewer than 2 cycles
    """
    frame = records if isinstance(records, pd.DataFrame) else records_to_frame(records)
    frame = frame.loc[:, MEASUREMENT_COLUMNS]
    if levels is None:
        levels = int(frame['target_level'].max()) + 1 if len(frame) else 0
    top = max(levels - 1, 1)
    present = set(frame['target_level'].unique().tolist())
    for level in (0, top):
        if level not in present:
            raise DomainError(f"no calibration records for level {level}")

    extremes = frame[frame['target_level'].isin([0, top])]
    grouped = extremes.groupby(['device_id', 'target_level'])['conductance_uS'].agg(['mean', 'var', 'count'])
    short = grouped[grouped['count'] < 2]
    if len(short):
        device, level = short.index[0]
        raise DomainError(f"device {device} has fewer than 2 cycles at level {level}")

    per_level = {}
    centered = []
    for level in (0, top):
        at_level = grouped.xs(level, level='target_level')
        readings = extremes.loc[extremes['target_level'] == level, 'conductance_uS'].to_numpy()
        mean = float(readings.mean())
        offsets = at_level['mean'] - mean
        centered.append(offsets)
        per_level[level] = LevelStats(
            level=level,
            mean=mean,
            sigma_d2d=_std_or_zero(offsets.to_numpy()),
            sigma_c2c=float(np.sqrt(at_level['var'].mean())),
            n_devices=int(len(at_level)),
            n_records=int(readings.size),
        )

    # A device's D2D offset is shared by both levels, so average its two centred means.
    device_offsets = pd.concat(centered).groupby(level=0).mean().to_numpy()
    stats = FittedStats(
        per_level=per_level,
        sigma_d2d=_std_or_zero(device_offsets),
        sigma_c2c=float(np.sqrt(grouped['var'].mean())),
        n_devices=int(device_offsets.size),
        n_records=int(len(extremes)),
    )
    model = MacroModel(
        g_off=per_level[0].mean,
        g_on=per_level[top].mean,
        levels=max(levels, 2),
        sigma_d2d=stats.sigma_d2d,
        sigma_c2c=stats.sigma_c2c,
    )
    return stats, model
