"""Experiment orchestration: baseline run, selective augmentation, threshold sweep.

The selective procedure: train an initial model, score the probe set
(test_set_a) by confidence margin, augment every sample whose margin falls
strictly below the threshold (twice each), merge the new series into the
training set, retrain from scratch with identical hyperparameters, and
evaluate the retrained model on the held-back half (test_set_b).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .augmentation import DEFAULT_WINDOW_FRACTION, augment_sample
from .data_io import Dataset, split_test
from .errors import ParameterError, ShapeError
from .nn_engine import FcnParams, PredictionDist, softmax_batch
from .rng import RngStream, derive_seed
from .training import TrainConfig, TrainedModel, evaluate, infer_logits, train

VAL_TESTA = "testa"
VAL_HOLDOUT_PREFIX = "holdout:"


@dataclass(frozen=True)
class SelectionResult:
    """Probe-set positions whose confidence margin fell below the threshold."""

    indices: tuple[int, ...]
    alphas: tuple[float, ...]
    threshold: float

    def __post_init__(self):
        if len(self.indices) != len(self.alphas):
            raise ParameterError("indices and alphas must be parallel")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ParameterError("indices must be strictly increasing")
        if any(a >= self.threshold for a in self.alphas):
            raise ParameterError("every selected alpha must be strictly below the threshold")


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one baseline or selective experiment."""

    mode: str  # "baseline" or "selective"
    alpha_threshold: float | None
    selected_count: int
    augmented_count: int
    train_size_final: int
    accuracy: float
    loss: float
    seed: int
    best_epoch: int
    config: dict


@dataclass(frozen=True)
class DataSplits:
    """Preprocessed training set plus the probe/eval halves of the test set."""

    train: Dataset
    test_a: Dataset
    test_b: Dataset

    @classmethod
    def from_datasets(cls, train: Dataset, test: Dataset) -> "DataSplits":
        test_a, test_b = split_test(test)
        return cls(train, test_a, test_b)


@dataclass
class BaselineArtifacts:
    report: ExperimentReport
    model: TrainedModel


@dataclass
class SelectiveArtifacts:
    report: ExperimentReport
    initial_model: TrainedModel
    final_model: TrainedModel
    selection: SelectionResult
    augmented: list
    expanded_train: Dataset


def confidence_alpha(dist: PredictionDist) -> float:
    """Absolute difference of the two class probabilities."""
    if dist.probs.shape[0] != 2 or dist.alpha is None:
        raise ParameterError("confidence margin is only defined for 2-class distributions")
    return float(abs(dist.probs[0] - dist.probs[1]))


def predict_alphas(params: FcnParams, probe_set: Dataset) -> np.ndarray:
    """Per-sample confidence margins of infer-mode predictions."""
    if probe_set.series_len != params.config.series_len:
        raise ShapeError(
            f"probe series length {probe_set.series_len} does not match the model's "
            f"{params.config.series_len}"
        )
    logits = infer_logits(params, probe_set.values_matrix())
    probs = softmax_batch(logits)
    return np.abs(probs[:, 0] - probs[:, 1])


def select_low_confidence(
    params: FcnParams, probe_set: Dataset, threshold: float
) -> SelectionResult:
    """Samples with margin strictly below the threshold, in probe order.

    Prediction correctness is irrelevant; only the margin matters.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError(f"threshold must lie in [0, 1], got {threshold}")
    alphas = predict_alphas(params, probe_set)
    indices = tuple(int(i) for i in np.flatnonzero(alphas < threshold))
    return SelectionResult(indices, tuple(float(alphas[i]) for i in indices), threshold)


def resolve_validation(
    train_set: Dataset, test_a: Dataset, val_mode: str
) -> tuple[Dataset, Dataset]:
    """Pick the validation set: the probe half (default) or a training holdout.

    ``holdout:F`` carves the final floor(F * n) training samples (file order)
    out as validation and trains on the remainder.
    """
    if val_mode == VAL_TESTA:
        return train_set, test_a
    if val_mode.startswith(VAL_HOLDOUT_PREFIX):
        try:
            frac = float(val_mode[len(VAL_HOLDOUT_PREFIX):])
        except ValueError:
            raise ParameterError(f"bad holdout fraction in {val_mode!r}") from None
        if not 0.0 < frac < 1.0:
            raise ParameterError("holdout fraction must lie strictly between 0 and 1")
        k = int(frac * len(train_set))
        if k < 1 or k >= len(train_set):
            raise ParameterError(f"holdout of {k} samples is not usable")
        keep = train_set.subset(range(len(train_set) - k))
        held = train_set.subset(range(len(train_set) - k, len(train_set)))
        return keep, held
    raise ParameterError(f"unknown validation mode {val_mode!r}")


def _config_snapshot(cfg: TrainConfig, fraction: float | None, val_mode: str) -> dict:
    snap = asdict(cfg)
    snap["window_fraction"] = fraction
    snap["val_mode"] = val_mode
    return snap


def run_baseline(
    cfg: TrainConfig, train_set: Dataset, test_b: Dataset, val_set: Dataset
) -> ExperimentReport:
    return run_baseline_detailed(cfg, train_set, test_b, val_set).report


def run_baseline_detailed(
    cfg: TrainConfig,
    train_set: Dataset,
    test_b: Dataset,
    val_set: Dataset,
    val_mode: str = VAL_TESTA,
) -> BaselineArtifacts:
    """Train on the untouched training set and evaluate on the eval half."""
    rng = RngStream(cfg.seed)
    model = train(cfg, train_set, val_set, rng.child("train", "initial"))
    accuracy, loss = evaluate(model.params, test_b)
    report = ExperimentReport(
        mode="baseline",
        alpha_threshold=None,
        selected_count=0,
        augmented_count=0,
        train_size_final=len(train_set),
        accuracy=accuracy,
        loss=loss,
        seed=cfg.seed,
        best_epoch=model.best_epoch,
        config=_config_snapshot(cfg, None, val_mode),
    )
    return BaselineArtifacts(report, model)


def run_selective(
    cfg: TrainConfig,
    train_set: Dataset,
    test_a: Dataset,
    test_b: Dataset,
    threshold: float,
    fraction: float = DEFAULT_WINDOW_FRACTION,
) -> ExperimentReport:
    return run_selective_detailed(cfg, train_set, test_a, test_b, threshold, fraction).report


def run_selective_detailed(
    cfg: TrainConfig,
    train_set: Dataset,
    test_a: Dataset,
    test_b: Dataset,
    threshold: float,
    fraction: float = DEFAULT_WINDOW_FRACTION,
    val_mode: str = VAL_TESTA,
) -> SelectiveArtifacts:
    """The full selective procedure, returning every intermediate artifact.

    The initial training consumes exactly the same random stream as
    :func:`run_baseline_detailed`, so for equal configs the two share their
    step-1 model bit for bit.  The retrain draws from a fresh stream
    ("from scratch", not warm-started).
    """
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError(f"threshold must lie in [0, 1], got {threshold}")
    rng = RngStream(cfg.seed)
    train_used, val_set = resolve_validation(train_set, test_a, val_mode)

    initial = train(cfg, train_used, val_set, rng.child("train", "initial"))
    selection = select_low_confidence(initial.params, test_a, threshold)

    augmented = []
    for probe_index in selection.indices:
        sample = test_a.samples[probe_index]
        pair = augment_sample(sample, fraction, rng.child("augment", probe_index))
        augmented.extend(pair)

    if augmented:
        expanded = Dataset(
            train_used.samples + tuple(augmented),
            train_used.series_len,
            train_used.class_count,
        )
    else:
        expanded = train_used
    final = train(cfg, expanded, val_set, rng.child("train", "retrain"))
    accuracy, loss = evaluate(final.params, test_b)

    report = ExperimentReport(
        mode="selective",
        alpha_threshold=threshold,
        selected_count=len(selection.indices),
        augmented_count=len(augmented),
        train_size_final=len(expanded),
        accuracy=accuracy,
        loss=loss,
        seed=cfg.seed,
        best_epoch=final.best_epoch,
        config=_config_snapshot(cfg, fraction, val_mode),
    )
    return SelectiveArtifacts(report, initial, final, selection, augmented, expanded)


def run_experiment_pair(
    cfg: TrainConfig,
    splits: DataSplits,
    threshold: float,
    fraction: float = DEFAULT_WINDOW_FRACTION,
    val_mode: str = VAL_TESTA,
) -> tuple[ExperimentReport, ExperimentReport]:
    """Baseline and selective reports sharing one initial training.

    Because the baseline and the selective step-1 training are driven by the
    same stream, the baseline report here is identical to an independent
    :func:`run_baseline` at the same seed; this just avoids training the
    same model twice.
    """
    artifacts = run_selective_detailed(
        cfg, splits.train, splits.test_a, splits.test_b, threshold, fraction, val_mode
    )
    train_used, _ = resolve_validation(splits.train, splits.test_a, val_mode)
    accuracy, loss = evaluate(artifacts.initial_model.params, splits.test_b)
    baseline = ExperimentReport(
        mode="baseline",
        alpha_threshold=None,
        selected_count=0,
        augmented_count=0,
        train_size_final=len(train_used),
        accuracy=accuracy,
        loss=loss,
        seed=cfg.seed,
        best_epoch=artifacts.initial_model.best_epoch,
        config=_config_snapshot(cfg, None, val_mode),
    )
    return baseline, artifacts.report


def sweep(
    cfg: TrainConfig,
    splits: DataSplits,
    thresholds: list[float],
    fraction: float = DEFAULT_WINDOW_FRACTION,
    val_mode: str = VAL_TESTA,
) -> list[ExperimentReport]:
    """One baseline plus one selective run per threshold, all from scratch.

    Every row gets its own seed derived from (base seed, row), so rows are
    independent yet the whole sweep is reproducible from the base seed.
    """
    if not thresholds:
        raise ParameterError("at least one threshold is required")
    for t in thresholds:
        if not 0.0 <= t <= 1.0:
            raise ParameterError(f"threshold must lie in [0, 1], got {t}")
    reports = []
    base_cfg = replace(cfg, seed=derive_seed(cfg.seed, "baseline"))
    train_used, val_set = resolve_validation(splits.train, splits.test_a, val_mode)
    reports.append(
        run_baseline_detailed(base_cfg, train_used, splits.test_b, val_set, val_mode).report
    )
    for i, threshold in enumerate(thresholds):
        row_cfg = replace(cfg, seed=derive_seed(cfg.seed, "threshold", i))
        reports.append(
            run_selective_detailed(
                row_cfg, splits.train, splits.test_a, splits.test_b,
                threshold, fraction, val_mode,
            ).report
        )
    return reports
