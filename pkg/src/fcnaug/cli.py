"""Command-line entry points: baseline, selective, sweep, augment, evaluate.

Exit codes: 0 success, 2 usage or input validation, 1 runtime failure.
Flag values override an optional JSON config file, which overrides
built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .augmentation import DEFAULT_WINDOW_FRACTION, augment_sample
from .data_io import Dataset, load_ucr_file, remap_labels, serialize_ucr, split_test
from .errors import DataFormatError, FcnAugError, UnsupportedLabelError
from .pipeline import (
    VAL_TESTA,
    DataSplits,
    resolve_validation,
    run_baseline_detailed,
    run_selective_detailed,
    select_low_confidence,
    sweep,
)
from .report import (
    curve_csv,
    report_csv,
    report_document,
    svg_line_chart,
    sweep_table_csv,
    write_json,
)
from .rng import RngStream
from .training import TrainConfig, evaluate, history_csv, load_checkpoint, save_checkpoint

DEFAULTS = {
    "seed": 0,
    "epochs": 500,
    "batch_size": 32,
    "fraction": DEFAULT_WINDOW_FRACTION,
    "val": VAL_TESTA,
    "out": "runs",
    "format": "json",
}


class UsageError(Exception):
    """Bad flags or unusable input files; exits with status 2."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcnaug",
        description="Selective window-slice augmentation for FCN time-series classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, training: bool = True) -> None:
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--seed", type=int, help="base seed (default 0)")
        p.add_argument("--out", help="output directory (default runs/)")
        p.add_argument("--format", choices=["json", "csv"], dest="fmt",
                       help="report format (default json; csv adds a CSV copy)")
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit timestamps so reruns are byte-identical")
        if training:
            p.add_argument("--epochs", type=int, help="training epochs (default 500)")
            p.add_argument("--batch-size", type=int, dest="batch_size",
                           help="batch size (default 32)")
            p.add_argument("--val",
                           help="validation set: testa or holdout:<fraction> (default testa)")

    p = sub.add_parser("baseline", help="train on the raw training set and evaluate")
    p.add_argument("--train", required=True, help="UCR training file")
    p.add_argument("--test", required=True, help="UCR test file (split in half)")
    common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("selective", help="full selective-augmentation run at one threshold")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--alpha", type=float, required=True,
                   help="confidence-margin threshold in [0, 1]")
    p.add_argument("--fraction", type=float, help="window fraction (default 0.7)")
    common(p)
    p.set_defaults(func=cmd_selective)

    p = sub.add_parser("sweep", help="baseline plus one selective run per threshold")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--alphas", required=True,
                   help="thresholds: start:stop:step or a comma-separated list")
    p.add_argument("--fraction", type=float)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("augment", help="inspect selection and augmentation for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--probe", required=True, help="UCR file scored for low confidence")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--fraction", type=float)
    common(p, training=False)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("evaluate", help="accuracy/loss of a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    common(p, training=False)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FcnAugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


# ---------------------------------------------------------------------------
# option resolution
# ---------------------------------------------------------------------------


def _resolve_options(args) -> dict:
    file_values = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            file_values = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(file_values, dict):
            raise UsageError(f"config file {path} must contain a JSON object")

    def pick(name):
        value = getattr(args, name, None)
        if value is not None:
            return value
        if name in file_values:
            return file_values[name]
        return DEFAULTS.get(name)

    opts = {name: pick(name) for name in
            ("seed", "epochs", "batch_size", "fraction", "val", "out")}
    opts["fmt"] = getattr(args, "fmt", None) or file_values.get("format") or DEFAULTS["format"]
    opts["with_timestamp"] = not getattr(args, "no_timestamp", False)
    if not 0.0 < float(opts["fraction"]) <= 1.0:
        raise UsageError(f"--fraction must lie in (0, 1], got {opts['fraction']}")
    return opts


def _train_config(opts) -> TrainConfig:
    try:
        return TrainConfig(
            epochs=int(opts["epochs"]),
            batch_size=int(opts["batch_size"]),
            seed=int(opts["seed"]),
        )
    except FcnAugError as exc:
        raise UsageError(str(exc)) from None


def _load_dataset(path_str: str) -> Dataset:
    path = Path(path_str)
    if not path.is_file():
        raise UsageError(f"file not found: {path}")
    try:
        return remap_labels(load_ucr_file(path))
    except (DataFormatError, UnsupportedLabelError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_split(args) -> tuple[Dataset, Dataset, Dataset]:
    train_ds = _load_dataset(args.train)
    test_ds = _load_dataset(args.test)
    test_a, test_b = split_test(test_ds)
    return train_ds, test_a, test_b


def _check_alpha(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise UsageError(f"--alpha must lie in [0, 1], got {alpha}")
    return float(alpha)


def _parse_alphas(spec_str: str) -> list[float]:
    try:
        if ":" in spec_str:
            parts = spec_str.split(":")
            if len(parts) != 3:
                raise ValueError("expected start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            count = int(round((stop - start) / step)) + 1
            values = [round(start + i * step, 12) for i in range(count)]
            values = [v for v in values if v <= stop + 1e-9]
        else:
            values = [float(x) for x in spec_str.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --alphas value {spec_str!r}: {exc}") from None
    if not values:
        raise UsageError("--alphas produced an empty threshold list")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise UsageError(f"threshold {v} outside [0, 1]")
    return values


def _outdir(opts) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_baseline(args) -> int:
    opts = _resolve_options(args)
    cfg = _train_config(opts)
    train_ds, test_a, test_b = _load_split(args)
    train_used, val_set = resolve_validation(train_ds, test_a, opts["val"])
    artifacts = run_baseline_detailed(cfg, train_used, test_b, val_set, opts["val"])
    out = _outdir(opts)
    write_json(out / "baseline.report.json",
               report_document(artifacts.report, opts["with_timestamp"]))
    if opts["fmt"] == "csv":
        (out / "baseline.report.csv").write_text(report_csv(artifacts.report))
    save_checkpoint(artifacts.model, out / "baseline.ckpt.json")
    (out / "baseline.history.csv").write_text(history_csv(artifacts.model))
    r = artifacts.report
    print(f"baseline: accuracy={r.accuracy:.4f} loss={r.loss:.4f} "
          f"best_epoch={r.best_epoch} out={out}")
    return 0


def cmd_selective(args) -> int:
    opts = _resolve_options(args)
    cfg = _train_config(opts)
    alpha = _check_alpha(args.alpha)
    train_ds, test_a, test_b = _load_split(args)
    artifacts = run_selective_detailed(
        cfg, train_ds, test_a, test_b, alpha, float(opts["fraction"]), opts["val"]
    )
    out = _outdir(opts)
    write_json(out / "selective.report.json",
               report_document(artifacts.report, opts["with_timestamp"]))
    if opts["fmt"] == "csv":
        (out / "selective.report.csv").write_text(report_csv(artifacts.report))
    save_checkpoint(artifacts.initial_model, out / "selective.initial.ckpt.json")
    save_checkpoint(artifacts.final_model, out / "selective.final.ckpt.json")
    (out / "selective.train_expanded.tsv").write_text(
        serialize_ucr(artifacts.expanded_train))
    (out / "selective.history.csv").write_text(history_csv(artifacts.final_model))
    r = artifacts.report
    print(f"selective: alpha={alpha} selected={r.selected_count} "
          f"accuracy={r.accuracy:.4f} loss={r.loss:.4f} out={out}")
    return 0


def cmd_sweep(args) -> int:
    opts = _resolve_options(args)
    cfg = _train_config(opts)
    thresholds = _parse_alphas(args.alphas)
    train_ds, test_a, test_b = _load_split(args)
    splits = DataSplits(train_ds, test_a, test_b)
    reports = sweep(cfg, splits, thresholds, float(opts["fraction"]), opts["val"])
    out = _outdir(opts)
    write_json(out / "sweep.reports.json",
               [report_document(r, opts["with_timestamp"]) for r in reports])
    table = sweep_table_csv(reports)
    (out / "sweep.table.csv").write_text(table)
    (out / "sweep.accuracy.csv").write_text(curve_csv(reports, "accuracy"))
    (out / "sweep.loss.csv").write_text(curve_csv(reports, "loss"))
    selective = [r for r in reports if r.mode == "selective"]
    xs = [float(r.alpha_threshold) for r in selective]
    (out / "sweep.accuracy.svg").write_text(
        svg_line_chart(xs, [r.accuracy for r in selective],
                       "Accuracy by confidence threshold", "alpha threshold", "accuracy"))
    (out / "sweep.loss.svg").write_text(
        svg_line_chart(xs, [r.loss for r in selective],
                       "Loss by confidence threshold", "alpha threshold", "loss"))
    print(table, end="")
    return 0


def cmd_augment(args) -> int:
    opts = _resolve_options(args)
    alpha = _check_alpha(args.alpha)
    ckpt_path = Path(args.checkpoint)
    if not ckpt_path.is_file():
        raise UsageError(f"file not found: {ckpt_path}")
    model = load_checkpoint(ckpt_path)
    probe = _load_dataset(args.probe)
    selection = select_low_confidence(model.params, probe, alpha)
    rng = RngStream(int(opts["seed"]))
    augmented = []
    for idx in selection.indices:
        augmented.extend(
            augment_sample(probe.samples[idx], float(opts["fraction"]),
                           rng.child("augment", idx)))
    out = _outdir(opts)
    write_json(out / "augment.selection.json", {
        "threshold": selection.threshold,
        "indices": list(selection.indices),
        "alphas": list(selection.alphas),
        "augmented_count": len(augmented),
    })
    augmented_path = out / "augment.augmented.tsv"
    if augmented:
        expanded = Dataset(tuple(augmented), probe.series_len, probe.class_count)
        augmented_path.write_text(serialize_ucr(expanded))
    else:
        augmented_path.write_text("")
        print("warning: no samples fell below the threshold; wrote an empty file",
              file=sys.stderr)
    print(f"augment: selected={len(selection.indices)} "
          f"augmented={len(augmented)} out={out}")
    return 0


def cmd_evaluate(args) -> int:
    opts = _resolve_options(args)
    ckpt_path = Path(args.checkpoint)
    if not ckpt_path.is_file():
        raise UsageError(f"file not found: {ckpt_path}")
    model = load_checkpoint(ckpt_path)
    data = _load_dataset(args.data)
    accuracy, loss = evaluate(model.params, data)
    if opts["fmt"] == "json":
        print(json.dumps({"accuracy": accuracy, "loss": loss}, sort_keys=True))
    else:
        print(f"accuracy={accuracy!r} loss={loss!r}")
    if getattr(args, "out", None) is not None:
        out = _outdir(opts)
        write_json(out / "evaluate.json", {"accuracy": accuracy, "loss": loss})
    return 0


if __name__ == "__main__":
    sys.exit(main())
