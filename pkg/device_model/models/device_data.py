"""
Data models for the FeFET device macro-model.
"""
import math
from dataclasses import dataclass

from shared.errors import DomainError

MAX_LEVELS = 8

# Floor applied to programmed conductance, as a fraction of g_off.
G_MIN_CLAMP_FRACTION = 0.01

# Measurement table schema, in file column order.
MEASUREMENT_COLUMNS = ['device_id', 'row', 'col', 'target_level', 'cycle', 'conductance_uS']


@dataclass(frozen=True)
class MacroModel:
    """Invertible FeFET conductance map with Gaussian D2D/C2C variation (all in µS)."""
    g_off: float = 1.0
    g_on: float = 10.0
    levels: int = 2
    sigma_d2d: float = 0.45
    sigma_c2c: float = 0.45

    def __post_init__(self):
        for name in ('g_off', 'g_on', 'sigma_d2d', 'sigma_c2c'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite number, got {value!r}")
        if isinstance(self.levels, bool) or not isinstance(self.levels, int):
            raise DomainError(f"levels must be an integer, got {self.levels!r}")
        if not self.g_on > self.g_off > 0:
            raise DomainError(f"need g_on > g_off > 0, got g_off={self.g_off}, g_on={self.g_on}")
        if self.sigma_d2d < 0 or self.sigma_c2c < 0:
            raise DomainError(
                f"sigmas must be non-negative, got sigma_d2d={self.sigma_d2d}, sigma_c2c={self.sigma_c2c}"
            )
        if not 2 <= self.levels <= MAX_LEVELS:
            raise DomainError(f"levels must be in [2, {MAX_LEVELS}], got {self.levels}")

    @classmethod
    def noiseless(cls, g_off: float = 1.0, g_on: float = 10.0, levels: int = 2) -> "MacroModel":
        return cls(g_off=g_off, g_on=g_on, levels=levels, sigma_d2d=0.0, sigma_c2c=0.0)

    @property
    def window(self) -> float:
        """Conductance window g_on - g_off."""
        return self.g_on - self.g_off

    @property
    def level_step(self) -> float:
        return (self.g_on - self.g_off) / (self.levels - 1)

    @property
    def g_min_clamp(self) -> float:
        return G_MIN_CLAMP_FRACTION * self.g_off

    @property
    def max_level(self) -> int:
        return self.levels - 1


@dataclass(frozen=True)
class FeFETCell:
    """One FeFET: stored level, fixed D2D offset and last programmed conductance."""
    level: int
    d2d_offset: float
    g_programmed: float
    program_events: int = 0


@dataclass(frozen=True)
class MeasurementRecord:
    """One programmed-conductance reading from the calibration protocol."""
    device_id: int
    row: int
    col: int
    target_level: int
    cycle: int
    conductance_uS: float
