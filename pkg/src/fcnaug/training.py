"""Training loop: Adam, reduce-on-plateau scheduling, best-checkpoint restore.

One call to :func:`train` runs the full schedule (500 epochs by default),
keeps the parameter snapshot with the lowest validation loss, and returns
it restored.  Everything is driven by an :class:`~fcnaug.rng.RngStream`,
so a (config, data, seed) triple fully determines the result.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data_io import Dataset
from .errors import (
    CheckpointError,
    NumericError,
    ParameterError,
    ShapeError,
    UnsupportedLabelError,
)
from .nn_engine import (
    INFER,
    TRAIN,
    ConvBlockParams,
    FcnConfig,
    FcnParams,
    fcn_backward,
    fcn_forward,
    init_params,
    softmax_batch,
    xent_loss,
)
from .rng import RngStream

CHECKPOINT_FORMAT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-7


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    epochs: int = 500
    batch_size: int = 32
    initial_lr: float = 1e-3
    plateau_factor: float = 0.5
    plateau_patience: int = 20
    min_lr: float = 1e-4
    min_delta: float = 1e-4
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ParameterError("epochs and batch_size must be at least 1")
        if not 0.0 < self.plateau_factor < 1.0:
            raise ParameterError("plateau_factor must lie strictly between 0 and 1")
        if self.min_lr > self.initial_lr:
            raise ParameterError("min_lr cannot exceed initial_lr")


@dataclass
class AdamState:
    """First/second moment accumulators (keyed like FcnParams learnables)."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


@dataclass(frozen=True)
class PlateauState:
    """Monitor for the reduce-on-plateau schedule."""

    best_val_loss: float
    epochs_since_improvement: int
    current_lr: float


@dataclass(frozen=True)
class EpochStats:
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class TrainedModel:
    """Best-checkpoint parameters plus the full per-epoch history."""

    params: FcnParams
    best_epoch: int
    best_val_loss: float
    history: list[EpochStats]


def adam_step(state: AdamState, params: FcnParams, grads, lr: float):
    """One Adam update with bias correction, applied in place.

    Raises NumericError naming the parameter group if a gradient is not
    finite.
    """
    state.t += 1
    t = state.t
    b1, b2 = state.beta1, state.beta2
    for name, theta in params.learnables():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(theta)
            state.v[name] = np.zeros_like(theta)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        mhat = m / (1.0 - b1**t)
        vhat = v / (1.0 - b2**t)
        theta -= lr * mhat / (np.sqrt(vhat) + state.eps)
    return state, params


def plateau_update(state: PlateauState, val_loss: float, cfg: TrainConfig) -> PlateauState:
    """Advance the plateau monitor by one epoch's validation loss.

    Improvement means val_loss < best - min_delta.  When the stall counter
    reaches the patience, the learning rate is multiplied by the factor
    (never below min_lr) and the counter resets; the recorded best persists
    across reductions.
    """
    if val_loss < state.best_val_loss - cfg.min_delta:
        return PlateauState(val_loss, 0, state.current_lr)
    stalled = state.epochs_since_improvement + 1
    if stalled >= cfg.plateau_patience:
        reduced = max(cfg.min_lr, state.current_lr * cfg.plateau_factor)
        return PlateauState(state.best_val_loss, 0, reduced)
    return PlateauState(state.best_val_loss, stalled, state.current_lr)


def batch_bounds(n: int, batch_size: int) -> list[tuple[int, int]]:
    """Consecutive [start, stop) batch windows; the final partial batch is kept."""
    return [(i, min(i + batch_size, n)) for i in range(0, n, batch_size)]


def infer_logits(params: FcnParams, values: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Infer-mode logits for an (N, L) value matrix, batched by ``chunk``."""
    out = []
    for start in range(0, values.shape[0], chunk):
        x = values[start : start + chunk][:, :, None]
        logits, _ = fcn_forward(params, x, INFER)
        out.append(logits)
    return np.concatenate(out, axis=0)


def evaluate(params: FcnParams, data: Dataset) -> tuple[float, float]:
    """Infer-mode accuracy and mean cross-entropy; never mutates params.

    Prediction is the argmax of the class probabilities with ties broken
    toward class 0.
    """
    if data.series_len != params.config.series_len:
        raise ShapeError(
            f"dataset series length {data.series_len} does not match the model's "
            f"{params.config.series_len}"
        )
    logits = infer_logits(params, data.values_matrix())
    labels = data.labels_array()
    loss, _ = xent_loss(logits, labels)
    probs = softmax_batch(logits)
    predictions = probs.argmax(axis=1)  # argmax takes the first max: ties -> class 0
    accuracy = float(np.mean(predictions == labels))
    return accuracy, loss


def train(
    cfg: TrainConfig, train_set: Dataset, val_set: Dataset, rng: RngStream
) -> TrainedModel:
    """Run the full training schedule and return the restored best model.

    Each epoch shuffles the training set (seeded per epoch), steps Adam over
    batches at the scheduler's current rate, evaluates the validation set in
    infer mode, and snapshots the parameters whenever the validation loss
    strictly improves on the best seen.
    """
    if train_set.class_count != 2 or val_set.class_count != 2:
        raise UnsupportedLabelError("training requires exactly 2 classes")
    if train_set.series_len != val_set.series_len:
        raise ShapeError("training and validation series lengths differ")

    config = FcnConfig(series_len=train_set.series_len, class_count=2)
    params = init_params(config, rng.child("init"))
    adam = AdamState()
    plateau = PlateauState(np.inf, 0, cfg.initial_lr)

    x_all = train_set.values_matrix()
    y_all = train_set.labels_array()
    n = len(train_set)

    best_params = None
    best_val_loss = np.inf
    best_epoch = -1
    history: list[EpochStats] = []

    for epoch in range(1, cfg.epochs + 1):
        lr = plateau.current_lr
        if cfg.shuffle:
            order = rng.child("shuffle", epoch).generator().permutation(n)
        else:
            order = np.arange(n)
        loss_sum = 0.0
        for start, stop in batch_bounds(n, cfg.batch_size):
            idx = order[start:stop]
            batch = x_all[idx][:, :, None]
            logits, caches = fcn_forward(params, batch, TRAIN)
            loss, grad_logits = xent_loss(logits, y_all[idx])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            grads = fcn_backward(params, caches, grad_logits)
            adam_step(adam, params, grads, lr)
            loss_sum += loss * (stop - start)
        train_loss = loss_sum / n

        _, val_loss = evaluate(params, val_set)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")
        if val_loss < best_val_loss:
            best_val_loss = val_loss
            best_epoch = epoch
            best_params = params.copy()
        plateau = plateau_update(plateau, val_loss, cfg)
        history.append(EpochStats(train_loss, val_loss, lr))

    assert best_params is not None
    return TrainedModel(best_params, best_epoch, float(best_val_loss), history)


# ---------------------------------------------------------------------------
# checkpoint files
# ---------------------------------------------------------------------------


def save_checkpoint(model: TrainedModel, path: str | Path) -> None:
    """Write the model as a self-describing JSON document.

    Floats are serialized with shortest-roundtrip formatting, so loading
    reproduces every tensor bit-identically.
    """
    config = model.params.config
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": {
            "series_len": config.series_len,
            "class_count": config.class_count,
            "filters": config.filters,
            "kernel": config.kernel,
        },
        "best_epoch": model.best_epoch,
        "best_val_loss": model.best_val_loss,
        "history": [[h.train_loss, h.val_loss, h.lr] for h in model.history],
        "tensors": {
            name: {"shape": list(tensor.shape), "values": tensor.ravel().tolist()}
            for name, tensor in model.params.all_tensors()
        },
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, allow_nan=False) + "\n")


def load_checkpoint(path: str | Path) -> TrainedModel:
    """Read a checkpoint document back into a TrainedModel."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint file not found: {path}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format in {path}: "
            f"expected version {CHECKPOINT_FORMAT_VERSION}"
        )
    try:
        cfg = doc["config"]
        config = FcnConfig(
            series_len=int(cfg["series_len"]),
            class_count=int(cfg["class_count"]),
            filters=int(cfg["filters"]),
            kernel=int(cfg["kernel"]),
        )
        tensors = doc["tensors"]
        blocks = []
        for i, cin in enumerate(config.block_in_channels(), start=1):
            blocks.append(
                ConvBlockParams(
                    weights=_tensor(tensors, f"block{i}/conv_weights",
                                    (config.kernel, cin, config.filters)),
                    bias=_tensor(tensors, f"block{i}/conv_bias", (config.filters,)),
                    gamma=_tensor(tensors, f"block{i}/bn_gamma", (config.filters,)),
                    beta=_tensor(tensors, f"block{i}/bn_beta", (config.filters,)),
                    running_mean=_tensor(tensors, f"block{i}/bn_running_mean",
                                         (config.filters,)),
                    running_var=_tensor(tensors, f"block{i}/bn_running_var",
                                        (config.filters,)),
                )
            )
        params = FcnParams(
            config,
            blocks,
            _tensor(tensors, "dense/weights", (config.filters, config.class_count)),
            _tensor(tensors, "dense/bias", (config.class_count,)),
        )
        history = [EpochStats(float(t), float(v), float(lr)) for t, v, lr in doc["history"]]
        return TrainedModel(
            params, int(doc["best_epoch"]), float(doc["best_val_loss"]), history
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"inconsistent checkpoint {path}: {exc}") from None


def _tensor(tensors: dict, name: str, shape: tuple[int, ...]) -> np.ndarray:
    entry = tensors[name]
    if tuple(entry["shape"]) != shape:
        raise CheckpointError(f"tensor {name} has shape {entry['shape']}, expected {shape}")
    arr = np.array(entry["values"], dtype=np.float64).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise CheckpointError(f"tensor {name} contains non-finite values")
    return arr


def history_csv(model: TrainedModel) -> str:
    """Per-epoch history as CSV with columns epoch,train_loss,val_loss,lr."""
    lines = ["epoch,train_loss,val_loss,lr"]
    for i, h in enumerate(model.history, start=1):
        lines.append(f"{i},{h.train_loss!r},{h.val_loss!r},{h.lr!r}")
    return "\n".join(lines) + "\n"
