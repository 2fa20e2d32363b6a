"""
Data models for the hybrid-precision MLP trainer.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from crossbar.array import CrossbarArray
from device_model.models.device_data import MacroModel
from hp_accumulator.accumulator import GradientAccumulator
from shared.errors import DomainError

UPDATE_MODES = ('binary', 'multilevel', 'float')
INIT_MODES = ('random', 'negative')

METRICS_COLUMNS = ['epoch', 'train_loss', 'train_acc', 'test_acc', 'bit_flips', 'program_events']


@dataclass(frozen=True)
class MlpTopology:
    """Layer sizes [n_in, n_hidden..., n_out]."""
    sizes: tuple = (784, 128, 10)

    def __post_init__(self):
        object.__setattr__(self, 'sizes', tuple(int(s) for s in self.sizes))
        if len(self.sizes) < 2:
            raise DomainError(f"topology needs at least 2 layers, got {list(self.sizes)}")
        if any(s < 1 for s in self.sizes):
            raise DomainError(f"layer sizes must be >= 1, got {list(self.sizes)}")

    @property
    def n_in(self) -> int:
        return self.sizes[0]

    @property
    def n_out(self) -> int:
        return self.sizes[-1]

    @property
    def weight_shapes(self) -> List[tuple]:
        return list(zip(self.sizes[:-1], self.sizes[1:]))


@dataclass(frozen=True)
class TrainingConfig:
    """Everything a training run needs besides the data."""
    learning_rate: float = 0.01
    batch_size: int = 8
    epochs: int = 10
    threshold: float = 0.01
    mode: str = 'binary'
    seed: int = 42
    init: str = 'random'
    macro_model: MacroModel = field(default_factory=MacroModel)

    def __post_init__(self):
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise DomainError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise DomainError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise DomainError(f"epochs must be >= 1, got {self.epochs}")
        if self.mode not in UPDATE_MODES:
            raise DomainError(f"mode must be one of {UPDATE_MODES}, got {self.mode!r}")
        if self.init not in INIT_MODES:
            raise DomainError(f"init must be one of {INIT_MODES}, got {self.init!r}")


@dataclass
class Dataset:
    """Flattened images scaled to [0, 1] and integer labels."""
    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.ndim != 2 or self.labels.ndim != 1 or len(self.images) != len(self.labels):
            raise DomainError(
                f"dataset needs (N, features) images and (N,) labels, got {self.images.shape} and {self.labels.shape}"
            )

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, count: int) -> "Dataset":
        """First `count` samples; 0 keeps everything."""
        if count <= 0 or count >= len(self):
            return self
        return Dataset(self.images[:count], self.labels[:count])


@dataclass
class LayerState:
    """One weight layer: crossbar + accumulator + sign mirror, or a dense matrix in float mode."""
    scale: float
    bias: np.ndarray
    array: Optional[CrossbarArray] = None
    accumulator: Optional[GradientAccumulator] = None
    signs: Optional[np.ndarray] = None
    dense: Optional[np.ndarray] = None

    def snapshot(self) -> np.ndarray:
        """Weights seen by forward and backward for the current step."""
        return self.dense if self.array is None else self.array.effective_weights()


@dataclass
class NetworkState:
    topology: MlpTopology
    layers: List[LayerState]
    mode: str
    step: int = 0


@dataclass(frozen=True)
class StepStats:
    samples: int
    loss_sum: float
    correct: int
    bit_flips: int
    program_events: int


@dataclass(frozen=True)
class EpochMetrics:
    """One metrics.csv row."""
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float
    bit_flips: int
    program_events: int
