"""
Forward pass, loss and backward pass of the crossbar-hosted MLP.

Hidden layer l computes relu(s_l · VMM(W_l, a) + b_l) with the fixed digital
scale s_l = 1/sqrt(fan-in); the output layer applies softmax. Weight matrices
are passed in explicitly so a training step can pin one W_eff snapshot for
both passes.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from crossbar.array import vmm_backward_weights, vmm_forward_weights
from shared.errors import DomainError
from trainer.models.network import NetworkState

PROB_FLOOR = 1e-12


@dataclass
class ForwardPass:
    """Per-layer record of one forward pass over a batch."""
    activations: List[np.ndarray]   # inputs to each weight layer, then the output probabilities
    currents: List[np.ndarray]      # raw VMM outputs per layer
    pre_activations: List[np.ndarray]

    @property
    def probs(self) -> np.ndarray:
        return self.activations[-1]


@dataclass
class Gradients:
    """Batch-averaged full-precision gradients per layer."""
    weights: List[np.ndarray]
    biases: List[np.ndarray]


def layer_scale(fan_in: int) -> float:
    return 1.0 / np.sqrt(fan_in)


def snapshot_weights(net: NetworkState) -> List[np.ndarray]:
    return [layer.snapshot() for layer in net.layers]


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(net: NetworkState, x: np.ndarray, weights: Optional[List[np.ndarray]] = None) -> ForwardPass:
    """
    Propagate one input vector or a (batch, n_in) matrix.

    Raises:
        DomainError: input length does not match n_in
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != net.topology.n_in:
        raise DomainError(f"input length {x.shape[1]} does not match n_in={net.topology.n_in}")
    if weights is None:
        weights = snapshot_weights(net)

    activations = [x]
    currents, pre_activations = [], []
    last = len(net.layers) - 1
    a = x
    for index, (layer, w) in enumerate(zip(net.layers, weights)):
        current = vmm_forward_weights(w, a)
        z = current * layer.scale + layer.bias
        currents.append(current)
        pre_activations.append(z)
        a = softmax(z) if index == last else np.maximum(z, 0.0)
        activations.append(a)
    return ForwardPass(activations, currents, pre_activations)


def loss_cross_entropy(probs: np.ndarray, label: int) -> float:
    """-log(probs[label]) with a 1e-12 probability floor."""
    probs = np.asarray(probs, dtype=np.float64)
    if isinstance(label, bool) or not isinstance(label, (int, np.integer)) or not 0 <= label < probs.shape[-1]:
        raise DomainError(f"label {label!r} outside [0, {probs.shape[-1] - 1}]")
    return float(-np.log(max(probs[label], PROB_FLOOR)))


def batch_cross_entropy(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-sample cross-entropy for a (batch, n_out) probability matrix."""
    picked = probs[np.arange(len(labels)), labels]
    return -np.log(np.maximum(picked, PROB_FLOOR))


def one_hot(labels: np.ndarray, classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise DomainError(f"labels must lie in [0, {classes - 1}]")
    out = np.zeros((labels.size, classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def backward(net: NetworkState, fp: ForwardPass, labels, weights: Optional[List[np.ndarray]] = None) -> Gradients:
    """
    Gradients of the mean cross-entropy over the batch in `fp`.

    Must receive the same weight snapshot the forward pass used.
    """
    if weights is None:
        weights = snapshot_weights(net)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    batch = labels.size
    delta = fp.probs - one_hot(labels, net.topology.n_out)

    grad_w: List[np.ndarray] = [None] * len(net.layers)
    grad_b: List[np.ndarray] = [None] * len(net.layers)
    for index in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[index]
        prev = fp.activations[index]
        grad_w[index] = (prev.T @ delta) * (layer.scale / batch)
        grad_b[index] = delta.mean(axis=0)
        if index > 0:
            back = vmm_backward_weights(weights[index], delta) * layer.scale
            delta = back * (fp.pre_activations[index - 1] > 0)
    return Gradients(grad_w, grad_b)
