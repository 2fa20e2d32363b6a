"""
MNIST IDX reader (and writer, for synthetic smoke datasets).
"""
import gzip
import os
import struct
from typing import Dict, Optional

import numpy as np

from shared.errors import FormatError
from trainer.models.network import Dataset

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

# Standard file names looked up under FERROSIM_DATA_DIR.
STANDARD_FILES = {
    'train_images': 'train-images-idx3-ubyte',
    'train_labels': 'train-labels-idx1-ubyte',
    'test_images': 't10k-images-idx3-ubyte',
    'test_labels': 't10k-labels-idx1-ubyte',
}


def _read_bytes(path: str) -> bytes:
    opener = gzip.open if path.endswith('.gz') else open
    with opener(path, 'rb') as f:
        return f.read()


def _header(data: bytes, path: str, magic: int, dims: int):
    size = 4 * (1 + dims)
    if len(data) < size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes, need {size})")
    fields = struct.unpack(f'>{1 + dims}I', data[:size])
    if fields[0] != magic:
        raise FormatError(f"{path}: wrong magic number, expected 0x{magic:08X}, got 0x{fields[0]:08X}")
    return fields[1:], size


def read_idx_images(path: str) -> np.ndarray:
    """(count, rows*cols) float64 pixels scaled to [0, 1]."""
    data = _read_bytes(path)
    (count, rows, cols), offset = _header(data, path, IMAGES_MAGIC, 3)
    expected = count * rows * cols
    if len(data) - offset != expected:
        raise FormatError(f"{path}: expected {expected} pixel bytes for {count} images, got {len(data) - offset}")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=offset)
    return pixels.reshape(count, rows * cols).astype(np.float64) / 255.0


def read_idx_labels(path: str) -> np.ndarray:
    data = _read_bytes(path)
    (count,), offset = _header(data, path, LABELS_MAGIC, 1)
    if len(data) - offset != count:
        raise FormatError(f"{path}: expected {count} label bytes, got {len(data) - offset}")
    return np.frombuffer(data, dtype=np.uint8, offset=offset).astype(np.int64)


def load_mnist(images_path: str, labels_path: str) -> Dataset:
    """
    Load an IDX image/label file pair.

    Raises:
        FormatError: wrong magic, truncated data, or image/label count mismatch
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise FormatError(
            f"{images_path} has {len(images)} images but {labels_path} has {len(labels)} labels"
        )
    return Dataset(images=images, labels=labels)


def write_idx_images(path: str, images: np.ndarray) -> str:
    """Write (count, rows, cols) uint8 images."""
    images = np.asarray(images, dtype=np.uint8)
    count, rows, cols = images.shape
    with open(path, 'wb') as f:
        f.write(struct.pack('>4I', IMAGES_MAGIC, count, rows, cols))
        f.write(images.tobytes())
    return path


def write_idx_labels(path: str, labels: np.ndarray) -> str:
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, 'wb') as f:
        f.write(struct.pack('>2I', LABELS_MAGIC, labels.size))
        f.write(labels.tobytes())
    return path


def find_standard_files(data_dir: Optional[str]) -> Dict[str, str]:
    """Standard MNIST paths (plain or .gz) present under data_dir."""
    found = {}
    if not data_dir:
        return found
    for key, name in STANDARD_FILES.items():
        for candidate in (name, name + '.gz'):
            path = os.path.join(data_dir, candidate)
            if os.path.exists(path):
                found[key] = path
                break
    return found


def class_prototypes(seed: int, side: int = 28, classes: int = 10) -> np.ndarray:
    """One fixed random stroke mask per class, shared by every split drawn from the same seed."""
    return np.random.default_rng([seed, 0]).random((classes, side, side)) < 0.2


def synthetic_digits(count: int, seed: int, side: int = 28, classes: int = 10, split: int = 0,
                     prototypes: Optional[np.ndarray] = None):
    """
    Learnable stand-in for MNIST: class prototype masks plus pixel noise.

    Args:
        count: Number of samples
        seed: Dataset seed; fixes the prototypes unless they are passed in
        split: Selects the label and noise stream, so splits differ but share prototypes
        prototypes: Optional (classes, side, side) boolean masks

    Returns:
        (images as (count, side, side) uint8, labels as (count,) uint8)
    """
    if prototypes is None:
        prototypes = class_prototypes(seed, side, classes)
    rng = np.random.default_rng([seed, 1, split])
    labels = rng.integers(0, prototypes.shape[0], size=count)
    noise = rng.random((count,) + prototypes.shape[1:])
    images = np.where(prototypes[labels], 200 + 55 * noise, 60 * noise)
    return images.astype(np.uint8), labels.astype(np.uint8)


def write_synthetic_mnist(data_dir: str, train_count: int, test_count: int, seed: int = 0) -> Dict[str, str]:
    """Write the four standard IDX files of a synthetic dataset under data_dir."""
    os.makedirs(data_dir, exist_ok=True)
    prototypes = class_prototypes(seed)
    train_images, train_labels = synthetic_digits(train_count, seed, split=0, prototypes=prototypes)
    test_images, test_labels = synthetic_digits(test_count, seed, split=1, prototypes=prototypes)
    paths = {key: os.path.join(data_dir, name) for key, name in STANDARD_FILES.items()}
    write_idx_images(paths['train_images'], train_images)
    write_idx_labels(paths['train_labels'], train_labels)
    write_idx_images(paths['test_images'], test_images)
    write_idx_labels(paths['test_labels'], test_labels)
    return paths
