"""
Counter-based keyed random numbers.

Every stochastic draw in the simulator is a pure function of
(seed, stream, event_counter, purpose, lane), so draws do not depend on the
order in which devices are visited and no generator state is carried around.
"""
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from shared.errors import DomainError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# Purpose tags keep D2D and C2C draws on disjoint streams.
PURPOSE_D2D = 1
PURPOSE_C2C = 2


@dataclass(frozen=True)
class RngKey:
    """Key of one stochastic draw: seed, device stream and program-event counter."""
    seed: int
    stream: Tuple[int, int, int, int] = (0, 0, 0, 0)
    event_counter: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _MASK64:
            raise DomainError(f"seed must fit in 64 bits, got {self.seed}")
        if len(self.stream) != 4:
            raise DomainError(f"stream must be (layer, row, col, pair), got {self.stream!r}")
        if self.event_counter < 0:
            raise DomainError(f"event_counter must be non-negative, got {self.event_counter}")

    def for_event(self, event_counter: int) -> "RngKey":
        """Same stream, another program event."""
        return replace(self, event_counter=event_counter)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _MUL1
    x = x ^ (x >> np.uint64(27))
    x = x * _MUL2
    return x ^ (x >> np.uint64(31))


def _as_u64(part, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(part).astype(np.uint64), shape)


def keyed_u64(seed: int, layer, row, col, pair, counter, purpose: int, lane: int) -> np.ndarray:
    """Hash key components (scalars or broadcastable arrays) to uniform 64-bit words."""
    parts = [layer, row, col, pair, counter, purpose, lane]
    shape = np.broadcast_shapes(*(np.shape(p) for p in parts))
    with np.errstate(over="ignore"):
        h = _mix64(np.full(shape, np.uint64(int(seed) & _MASK64)) + _GOLDEN)
        for part in parts:
            h = _mix64(h ^ _mix64(_as_u64(part, shape) + _GOLDEN))
    return h


def keyed_uniform(seed: int, layer, row, col, pair, counter, purpose: int, lane: int) -> np.ndarray:
    """Uniform floats in the open interval (0, 1)."""
    bits = keyed_u64(seed, layer, row, col, pair, counter, purpose, lane)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def keyed_normal(seed: int, layer, row, col, pair, counter, purpose: int) -> np.ndarray:
    """Standard normal draws via Box-Muller over two independent lanes."""
    u1 = keyed_uniform(seed, layer, row, col, pair, counter, purpose, 0)
    u2 = keyed_uniform(seed, layer, row, col, pair, counter, purpose, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def normal_for_key(key: RngKey, purpose: int) -> float:
    """Scalar standard normal draw for a single RngKey."""
    layer, row, col, pair = key.stream
    return float(keyed_normal(key.seed, layer, row, col, pair, key.event_counter, purpose))


def generator(seed: int, *purpose: int) -> np.random.Generator:
    """numpy Generator for bulk draws (shuffles, initial signs) keyed by purpose words."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _MASK64, *purpose]))
