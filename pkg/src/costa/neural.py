"""Fully connected network, backprop, Adam and normalization in plain numpy.

Batches are row-major: an input batch has shape ``(batch, n_in)``. Weights are
stored ``(n_out, n_in)`` so a layer computes ``x @ W.T + b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import container

DEFAULT_LAYER_DIMS = (22, 80, 80, 80, 80, 20)
LEAKY_SLOPE = 0.01
STD_FLOOR = 1e-8

CHECKPOINT_MAGIC = b"COSTANN\x00"
CHECKPOINT_VERSION = 1


@dataclass
class Mlp:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    slope: float = LEAKY_SLOPE

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[0],):
                raise ValueError(f"layer {i}: bias shape {b.shape} does not match weight {w.shape}")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: input width {w.shape[1]} != previous output width")

    @classmethod
    def init(cls, layer_dims=DEFAULT_LAYER_DIMS, seed: int | np.random.Generator = 0, slope: float = LEAKY_SLOPE) -> "Mlp":
        """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, slope)

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def params(self) -> list[np.ndarray]:
        """Parameters in layer order: ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.slope)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)


def leaky_relu(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z > 0, z, slope * z)


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Network output for one input vector or a batch of row vectors."""
    a = np.asarray(x, dtype=float)
    if a.shape[-1] != net.layer_dims[0]:
        raise ValueError(f"input width {a.shape[-1]} != network input width {net.layer_dims[0]}")
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w.T + b
        if i < last:
            a = leaky_relu(a, net.slope)
    return a


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((pred - target) ** 2))


def backward(net: Mlp, inputs: np.ndarray, targets: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """MSE loss (mean over batch and outputs) and its gradient.

    Gradients come back in the same order as :attr:`Mlp.params`.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"batch size mismatch: {x.shape[0]} inputs, {y.shape[0]} targets")
    if x.shape[1] != net.layer_dims[0] or y.shape[1] != net.layer_dims[-1]:
        raise ValueError(f"batch widths ({x.shape[1]}, {y.shape[1]}) do not match network {net.layer_dims}")

    last = len(net.weights) - 1
    acts = [x]
    pre = []
    a = x
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = leaky_relu(z, net.slope) if i < last else z
        acts.append(a)

    diff = a - y
    loss = float(np.mean(diff**2))
    delta = 2.0 * diff / diff.size
    grads: list[np.ndarray] = [None] * (2 * len(net.weights))  # type: ignore[list-item]
    for i in range(last, -1, -1):
        if i < last:
            delta = delta * np.where(pre[i] > 0, 1.0, net.slope)
        grads[2 * i] = delta.T @ acts[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = delta @ net.weights[i]
    return loss, grads


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    learning_rate: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], learning_rate: float = 1e-5, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0, learning_rate, **kw)


def adam_update(state: AdamState, params: list[np.ndarray], gradients: list[np.ndarray]) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam step. Updates ``params`` and ``state`` in place and returns both."""
    if len(params) != len(gradients) or len(params) != len(state.first_moment):
        raise ValueError("params, gradients and optimizer state must have the same length")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, m, v in zip(params, gradients, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return params, state


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray = field(repr=False)

    def normalize(self, v: np.ndarray) -> np.ndarray:
        return (np.asarray(v, dtype=float) - self.mean) / self.std

    def denormalize(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) * self.std + self.mean


def fit_norm_stats(vectors: np.ndarray, floor: float = STD_FLOOR) -> NormStats:
    """Component-wise mean and population std of a ``(count, width)`` collection."""
    data = np.asarray(vectors, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("need a nonempty (count, width) array")
    return NormStats(data.mean(axis=0), np.maximum(data.std(axis=0), floor))


def normalize(stats: NormStats, v: np.ndarray) -> np.ndarray:
    return stats.normalize(v)


def denormalize(stats: NormStats, v: np.ndarray) -> np.ndarray:
    return stats.denormalize(v)


def save_checkpoint(
    path: str | Path,
    net: Mlp,
    input_stats: NormStats,
    target_stats: NormStats,
    meta: dict | None = None,
) -> None:
    header = {"layer_dims": list(net.layer_dims), "slope": net.slope, "meta": meta or {}}
    arrays: dict[str, np.ndarray] = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"W{i}"] = w
        arrays[f"b{i}"] = b
    arrays["input_mean"] = input_stats.mean
    arrays["input_std"] = input_stats.std
    arrays["target_mean"] = target_stats.mean
    arrays["target_std"] = target_stats.std
    container.write(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, header, arrays)


def load_checkpoint(path: str | Path) -> tuple[Mlp, NormStats, NormStats, dict]:
    header, arrays = container.read(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    n_layers = len(header["layer_dims"]) - 1
    net = Mlp(
        [arrays[f"W{i}"] for i in range(n_layers)],
        [arrays[f"b{i}"] for i in range(n_layers)],
        header["slope"],
    )
    if list(net.layer_dims) != header["layer_dims"]:
        raise container.FormatError("stored layer_dims do not match stored weights")
    return (
        net,
        NormStats(arrays["input_mean"], arrays["input_std"]),
        NormStats(arrays["target_mean"], arrays["target_std"]),
        header["meta"],
    )
