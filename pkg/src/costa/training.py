"""Minibatch training with validation-based early stopping."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .datagen import DataExample, Dataset
from .neural import AdamState, Mlp, adam_update, backward, forward


class Mode(str, enum.Enum):
    DDM = "ddm"
    HAM = "ham"


IO_FIELDS = {
    Mode.DDM: ("ddm_input", "ddm_target"),
    Mode.HAM: ("ham_input", "ham_target"),
}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-5
    batch_size: int = 32
    validation_period: int = 100
    overfit_limit: int = 20
    max_iterations: int = 200_000
    seed: int = 0
    mode: Mode = Mode.HAM

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        for name in ("batch_size", "validation_period", "overfit_limit"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


@dataclass
class TrainHistory:
    train_iterations: list[int] = field(default_factory=list)
    train_losses: list[float] = field(default_factory=list)
    val_iterations: list[int] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_iteration: int = 0
    best_val_loss: float = math.inf
    stop_reason: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def log_lines(self) -> list[str]:
        """``iter, train_loss, val_loss`` rows; ``val_loss`` is blank when not evaluated."""
        val = dict(zip(self.val_iterations, self.val_losses))
        train = dict(zip(self.train_iterations, self.train_losses))
        lines = []
        for it in sorted(set(val) | set(train)):
            tl = f"{train[it]:.17g}" if it in train else ""
            vl = f"{val[it]:.17g}" if it in val else ""
            lines.append(f"{it}, {tl}, {vl}")
        return lines


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, history: TrainHistory):
        super().__init__(message)
        self.history = history


def select_io(example: DataExample, mode: Mode | str) -> tuple[np.ndarray, np.ndarray]:
    inp, tgt = IO_FIELDS[Mode(mode)]
    return getattr(example, inp), getattr(example, tgt)


def select_arrays(ds: Dataset, mode: Mode | str) -> tuple[np.ndarray, np.ndarray]:
    inp, tgt = IO_FIELDS[Mode(mode)]
    return ds.family(inp), ds.family(tgt)


def validation_loss(net: Mlp, inputs: np.ndarray, targets: np.ndarray, chunk: int = 8192) -> float:
    """MSE over the whole set, accumulated in a fixed chunk order."""
    total = 0.0
    for start in range(0, len(inputs), chunk):
        diff = forward(net, inputs[start : start + chunk]) - targets[start : start + chunk]
        total += float(np.sum(diff * diff))
    return total / targets.size


def _batches(rng: np.random.Generator, n: int, batch_size: int):
    while True:
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            yield order[start : start + batch_size]


def train(train_ds: Dataset, val_ds: Dataset, net: Mlp, cfg: TrainConfig) -> tuple[Mlp, TrainHistory]:
    """Train a copy of ``net``; return the best-validation weights and the history.

    Validation runs at iteration 0 and then every ``validation_period``
    optimizer steps. Training stops after ``overfit_limit`` consecutive
    validations without a new minimum, or at ``max_iterations``.
    """
    x_train, y_train = select_arrays(train_ds, cfg.mode)
    x_val, y_val = select_arrays(val_ds, cfg.mode)
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("training and validation sets must be nonempty")
    if x_train.shape[1] != net.layer_dims[0] or y_train.shape[1] != net.layer_dims[-1]:
        raise ValueError(f"data widths ({x_train.shape[1]}, {y_train.shape[1]}) do not match network {net.layer_dims}")

    net = net.copy()
    params = net.params
    opt = AdamState.for_params(params, cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory()

    best = net.copy()
    history.best_val_loss = validation_loss(net, x_val, y_val)
    history.val_iterations.append(0)
    history.val_losses.append(history.best_val_loss)
    since_best = 0
    running = 0.0
    batches = _batches(rng, len(x_train), cfg.batch_size)

    it = 0
    while it < cfg.max_iterations:
        idx = next(batches)
        loss, grads = backward(net, x_train[idx], y_train[idx])
        if not math.isfinite(loss):
            history.stop_reason = "diverged"
            raise TrainingDiverged(f"non-finite training loss at iteration {it + 1}", history)
        adam_update(opt, params, grads)
        running += loss
        it += 1
        if it % cfg.validation_period == 0:
            history.train_iterations.append(it)
            history.train_losses.append(running / cfg.validation_period)
            running = 0.0
            vl = validation_loss(net, x_val, y_val)
            history.val_iterations.append(it)
            history.val_losses.append(vl)
            if not math.isfinite(vl):
                history.stop_reason = "diverged"
                raise TrainingDiverged(f"non-finite validation loss at iteration {it}", history)
            if vl < history.best_val_loss:
                history.best_val_loss = vl
                history.best_iteration = it
                best = net.copy()
                since_best = 0
            else:
                since_best += 1
                if since_best >= cfg.overfit_limit:
                    history.stop_reason = "overfit"
                    return best, history
    history.stop_reason = "max_iterations"
    return best, history


def write_history(history: TrainHistory, log_path: str | Path, json_path: str | Path) -> None:
    Path(log_path).write_text("".join(line + "\n" for line in history.log_lines()))
    Path(json_path).write_text(json.dumps(history.to_dict(), indent=2, sort_keys=True) + "\n")
