"""
Hybrid-precision training loop.

Binary (or multilevel) weights live on crossbar arrays and are used for the
forward and backward passes; gradients are accumulated at high precision and
reach the devices only when an accumulator entry crosses the threshold.
"""
from typing import List, Optional

import numpy as np

from crossbar.array import CrossbarArray
from hp_accumulator.accumulator import GradientAccumulator
from shared.errors import DomainError
from shared.rng import RngKey, generator
from trainer.mlp import backward, batch_cross_entropy, forward, layer_scale, snapshot_weights
from trainer.models.network import (
    Dataset,
    EpochMetrics,
    LayerState,
    MlpTopology,
    NetworkState,
    StepStats,
    TrainingConfig,
)

# Purpose words for numpy generators seeded from the run seed.
INIT_PURPOSE = 101
SHUFFLE_PURPOSE = 202

EVAL_BATCH = 1000


def init_network(topology: MlpTopology, config: TrainingConfig) -> NetworkState:
    """
    Build one crossbar and accumulator per weight layer (or dense weights in float mode).

    Arrays start with every weight at -1; with init="random" a seeded random
    sign matrix is then programmed so hidden units are not all identical.
    """
    layers = []
    for index, (rows, cols) in enumerate(topology.weight_shapes):
        scale = layer_scale(rows)
        bias = np.zeros(cols)
        rng = generator(config.seed, INIT_PURPOSE, index)
        if config.mode == 'float':
            dense = rng.uniform(-1.0, 1.0, size=(rows, cols))
            layers.append(LayerState(scale=scale, bias=bias, dense=dense))
            continue

        array = CrossbarArray.build(rows, cols, config.macro_model, RngKey(config.seed, (index, 0, 0, 0)))
        if config.init == 'random':
            array.program_weight_matrix(rng.choice(np.array([-1, 1], dtype=np.int8), size=(rows, cols)))
        layers.append(LayerState(
            scale=scale,
            bias=bias,
            array=array,
            accumulator=GradientAccumulator(rows, cols, config.threshold),
            signs=array.signs(),
        ))
    return NetworkState(topology=topology, layers=layers, mode=config.mode)


def _update_layer(layer: LayerState, grad_w: np.ndarray, mode: str, learning_rate: float):
    """Returns (weight changes, device program events) for one layer."""
    if mode == 'float':
        layer.dense = layer.dense - learning_rate * grad_w
        return 0, 0

    layer.accumulator.accumulate(-learning_rate * grad_w)
    if mode == 'binary':
        flips = layer.accumulator.drain_binary(layer.signs)
        changes = int(np.count_nonzero(flips))
        events = layer.array.program_weight_matrix(np.where(flips != 0, flips, layer.signs)) if changes else 0
    else:
        pulses = layer.accumulator.drain_multilevel()
        if np.any(pulses):
            absorbed, events = layer.array.apply_signed_pulses(pulses)
            changes = int(np.abs(absorbed).sum())
        else:
            changes, events = 0, 0
    layer.signs = layer.array.signs()
    return changes, events


def train_step(net: NetworkState, images: np.ndarray, labels: np.ndarray, config: TrainingConfig) -> StepStats:
    """
    One hybrid update over a batch.

    Forward and backward both use the W_eff snapshot taken at step start;
    devices are reprogrammed only after the batch gradient is drained.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise DomainError("batch must be non-empty")

    weights = snapshot_weights(net)
    fp = forward(net, images, weights)
    grads = backward(net, fp, labels, weights)

    bit_flips = 0
    program_events = 0
    for layer, grad_w, grad_b in zip(net.layers, grads.weights, grads.biases):
        changes, events = _update_layer(layer, grad_w, net.mode, config.learning_rate)
        bit_flips += changes
        program_events += events
        layer.bias = layer.bias - config.learning_rate * grad_b
    net.step += 1

    return StepStats(
        samples=int(labels.size),
        loss_sum=float(batch_cross_entropy(fp.probs, labels).sum()),
        correct=int(np.count_nonzero(np.argmax(fp.probs, axis=1) == labels)),
        bit_flips=bit_flips,
        program_events=program_events,
    )


def predict(net: NetworkState, images: np.ndarray, weights: Optional[List[np.ndarray]] = None) -> np.ndarray:
    """Class indices; ties go to the lowest index."""
    weights = snapshot_weights(net) if weights is None else weights
    out = []
    for start in range(0, len(images), EVAL_BATCH):
        probs = forward(net, images[start:start + EVAL_BATCH], weights).probs
        out.append(np.argmax(probs, axis=1))
    return np.concatenate(out)


def evaluate(net: NetworkState, dataset: Dataset) -> float:
    """Fraction of samples whose argmax class equals the label."""
    if len(dataset) == 0:
        raise DomainError("evaluation dataset must be non-empty")
    return float(np.mean(predict(net, dataset.images) == dataset.labels))


def train_epoch(net: NetworkState, dataset: Dataset, config: TrainingConfig, epoch: int,
                test_set: Optional[Dataset] = None) -> EpochMetrics:
    """
    Shuffle with a permutation seeded by (seed, epoch), run every batch, then evaluate.

    test_acc is measured on test_set, or on the training set when none is given.
    """
    if len(dataset) == 0:
        raise DomainError("training dataset must be non-empty")
    order = generator(config.seed, SHUFFLE_PURPOSE, epoch).permutation(len(dataset))

    samples = correct = bit_flips = program_events = 0
    loss_sum = 0.0
    for start in range(0, len(order), config.batch_size):
        batch = order[start:start + config.batch_size]
        stats = train_step(net, dataset.images[batch], dataset.labels[batch], config)
        samples += stats.samples
        loss_sum += stats.loss_sum
        correct += stats.correct
        bit_flips += stats.bit_flips
        program_events += stats.program_events

    return EpochMetrics(
        epoch=epoch,
        train_loss=loss_sum / samples,
        train_acc=correct / samples,
        test_acc=evaluate(net, test_set if test_set is not None else dataset),
        bit_flips=bit_flips,
        program_events=program_events,
    )
