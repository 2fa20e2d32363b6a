"""
Fixed-point gradient accumulator (χ) with threshold-crossing drain.

χ is stored as signed 32-bit counts of a quantum q = ε / 2**12, so the update
threshold ε is exactly 4096 quanta. All arithmetic saturates at ±(2**31 - 1).
"""
from dataclasses import dataclass

import numpy as np

from shared.errors import DomainError

FRACTIONAL_BITS = 12
THRESHOLD_QUANTA = 1 << FRACTIONAL_BITS
STORAGE_MAX = (1 << 31) - 1


@dataclass(frozen=True)
class FixedPointFormat:
    """Quantisation of χ for a given threshold ε (weight units)."""
    threshold: float

    def __post_init__(self):
        if not np.isfinite(self.threshold) or self.threshold <= 0:
            raise DomainError(f"threshold must be positive and finite, got {self.threshold!r}")

    @property
    def quantum(self) -> float:
        return self.threshold / THRESHOLD_QUANTA

    def to_quanta(self, values: np.ndarray) -> np.ndarray:
        """Round-half-even conversion of weight-unit values to saturated quanta."""
        scaled = np.clip(np.asarray(values, dtype=np.float64) / self.quantum, -STORAGE_MAX, STORAGE_MAX)
        return np.rint(scaled).astype(np.int64)


class GradientAccumulator:
    """rows x cols grid of χ values emulating the SRAM unit."""

    def __init__(self, rows: int, cols: int, threshold: float):
        if rows < 1 or cols < 1:
            raise DomainError(f"accumulator dimensions must be >= 1, got {rows}x{cols}")
        self.format = FixedPointFormat(threshold)
        self.chi = np.zeros((rows, cols), dtype=np.int32)

    @property
    def shape(self):
        return self.chi.shape

    @property
    def threshold(self) -> float:
        return self.format.threshold

    def _check_shape(self, matrix: np.ndarray, name: str) -> np.ndarray:
        matrix = np.asarray(matrix)
        if matrix.shape != self.chi.shape:
            raise DomainError(f"{name} shape {matrix.shape} does not match accumulator {self.chi.shape}")
        return matrix

    def accumulate(self, delta_w: np.ndarray) -> None:
        """
        Add desired weight changes (already -η·∇) to χ, saturating; never drains.

        Raises:
            DomainError: shape mismatch or non-finite entries
        """
        delta_w = self._check_shape(delta_w, "delta_w").astype(np.float64)
        if not np.all(np.isfinite(delta_w)):
            raise DomainError("delta_w must be finite")
        total = self.chi.astype(np.int64) + self.format.to_quanta(delta_w)
        self.chi = np.clip(total, -STORAGE_MAX, STORAGE_MAX).astype(np.int32)

    def drain_multilevel(self) -> np.ndarray:
        """
        Emit whole threshold units as signed pulse counts, keeping the residual.

        p = trunc(χ / 4096) and χ := χ - 4096·p, so |χ| < 4096 afterwards and
        4096·p + χ_after == χ_before per entry.
        """
        chi = self.chi.astype(np.int64)
        pulses = np.sign(chi) * (np.abs(chi) // THRESHOLD_QUANTA)
        self.chi = (chi - pulses * THRESHOLD_QUANTA).astype(np.int32)
        return pulses

    def drain_binary(self, current_signs: np.ndarray) -> np.ndarray:
        """
        Bitwise drain against the current sign matrix.

        A crossing against the stored sign flips it and resets χ to 0. A crossing
        in the direction the bit already points clamps χ to ±4095 without a flip.

        Returns:
            Flip matrix: +1 (flip to +1), -1 (flip to -1), 0 (unchanged)
        """
        signs = self._check_shape(current_signs, "current_signs")
        chi = self.chi.astype(np.int64)
        up = chi >= THRESHOLD_QUANTA
        down = chi <= -THRESHOLD_QUANTA

        flip_up = up & (signs == -1)
        flip_down = down & (signs == 1)
        chi[flip_up | flip_down] = 0
        chi[up & (signs == 1)] = THRESHOLD_QUANTA - 1
        chi[down & (signs == -1)] = -(THRESHOLD_QUANTA - 1)

        self.chi = chi.astype(np.int32)
        return flip_up.astype(np.int8) - flip_down.astype(np.int8)
