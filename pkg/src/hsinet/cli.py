"""Command-line interface: train, evaluate, map, and info subcommands.

Every run prints a "resolved config" block (all defaults and seeds made
explicit) and writes it as config.json next to the other artifacts, so any
result can be reproduced from its output directory alone. Exit codes
group failures by family: 2 configuration, 3 data, 4 numeric, 1 anything
else.

This module imports the numeric code lazily inside the command functions:
--threads works by setting the BLAS thread-count environment variables,
which must happen before numpy is first imported.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

from .errors import (
    ConfigError,
    DataError,
    FormatError,
    HsiNetError,
    LabelError,
    MetricError,
    NumericError,
    ParameterError,
    ShapeError,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_DEFAULTS = {
    "window": 25,
    "bands": 30,
    "whiten": True,
    "padding": "zero",
    "train_fraction": 0.3,
    "val_fraction": 0.1,
    "epochs": 100,
    "batch_size": 256,
    "lr": 0.001,
    "dropout": 0.4,
    "variant": "hybrid",
    "seed_init": 101,
    "seed_shuffle": 202,
    "seed_split": 303,
    "repeats": 1,
}

_THREAD_VARS = (
    "OPENBLAS_NUM_THREADS",
    "OMP_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


@dataclass
class ExperimentConfig:
    """Fully resolved settings for one command invocation."""

    dataset: str = None
    labels: str = None
    checkpoint: str = None
    out: str = None
    window: int = 25
    bands: int = 30
    whiten: bool = True
    padding: str = "zero"
    train_fraction: float = 0.3
    val_fraction: float = 0.1
    epochs: int = 100
    batch_size: int = 256
    lr: float = 0.001
    dropout: float = 0.4
    variant: str = "hybrid"
    seed_init: int = 101
    seed_shuffle: int = 202
    seed_split: int = 303
    repeats: int = 1
    threads: int = None

    def as_dict(self):
        return asdict(self)


def _apply_threads(n):
    if n is not None:
        if n < 1:
            raise ConfigError(f"--threads must be >= 1, got {n}")
        for var in _THREAD_VARS:
            os.environ[var] = str(n)


def _load_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            values = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    known = set(ExperimentConfig().as_dict())
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"config file {path}: unknown keys {sorted(unknown)}")
    return values


def _resolve(args, require=()):
    """Merge defaults <- config file <- explicit flags into an ExperimentConfig."""
    merged = dict(_DEFAULTS)
    merged.update({k: None for k in ("dataset", "labels", "checkpoint", "out", "threads")})
    config_path = getattr(args, "config", None)
    if config_path:
        merged.update(_load_config_file(config_path))
    for key in list(merged):
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    config = ExperimentConfig(**merged)
    for name in require:
        if getattr(config, name) is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required")
    if config.padding not in ("zero", "valid"):
        raise ConfigError(f"padding must be 'zero' or 'valid', got {config.padding!r}")
    if config.repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {config.repeats}")
    return config


def _print_resolved(config):
    print("resolved config:")
    print(json.dumps(config.as_dict(), sort_keys=True, indent=2))


def _write_config(config, out_dir):
    with open(os.path.join(out_dir, "config.json"), "w", encoding="ascii") as fh:
        fh.write(json.dumps(config.as_dict(), sort_keys=True, indent=2))
        fh.write("\n")


def _prepare_split(config):
    """load -> pca -> patches -> stratified split, shared by train/evaluate."""
    from . import pipeline

    cube = pipeline.load_cube(config.dataset, config.labels)
    n_classes = cube.n_classes
    if n_classes < 2:
        raise DataError(f"label grid holds {n_classes} classes; need at least 2")
    reduced = pipeline.pca_reduce(cube, config.bands, whiten=config.whiten)
    patches = pipeline.extract_patches(
        reduced, cube.labels, config.window, padding=config.padding)
    train_set, test_set = pipeline.split_stratified(
        patches, config.train_fraction, config.seed_split)
    return cube, train_set, test_set


def _evaluate_to_artifacts(model, test_set, config, out_dir):
    from . import metrics, optim

    loss, accuracy, preds = optim.evaluate(model, test_set, config.batch_size)
    cm = metrics.confusion_matrix(test_set.labels, preds, model.config.classes)
    report = metrics.metrics_report(cm)
    metrics.write_metrics_json(os.path.join(out_dir, "metrics.json"), report)
    metrics.write_confusion_csv(os.path.join(out_dir, "confusion.csv"), cm)
    print(f"test loss {loss:.6f} acc {accuracy:.6f}")
    print(f"test oa {report['oa']:.6f} aa {report['aa']:.6f} kappa {report['kappa']:.6f}")
    return report


def _train_once(config, out_dir):
    from . import model as model_mod
    from . import optim

    os.makedirs(out_dir, exist_ok=True)
    _print_resolved(config)
    _write_config(config, out_dir)
    cube, train_set, test_set = _prepare_split(config)
    print(f"dataset {config.dataset}: {cube.height}x{cube.width}x{cube.depth}, "
          f"{cube.n_classes} classes, {len(train_set)} train / {len(test_set)} test patches")
    mcfg = model_mod.ModelConfig(
        window=config.window, bands=config.bands, classes=cube.n_classes,
        dropout_rate=config.dropout, variant=config.variant, seed=config.seed_init)
    model = model_mod.build_model(mcfg)
    tcfg = optim.TrainConfig(
        batch_size=config.batch_size, epochs=config.epochs,
        learning_rate=config.lr, shuffle_seed=config.seed_shuffle,
        validation_fraction=config.val_fraction)
    model, history = optim.train(model, train_set, tcfg, progress=_print_epoch)
    model_mod.model_save(model, os.path.join(out_dir, "model.hsnm"))
    history.to_csv(os.path.join(out_dir, "history.csv"))
    return _evaluate_to_artifacts(model, test_set, config, out_dir)


def _print_epoch(record):
    val = ""
    if record.val_loss is not None:
        val = f" val_loss {record.val_loss:.4f} val_acc {record.val_acc:.4f}"
    print(f"epoch {record.epoch}: train_loss {record.train_loss:.4f} "
          f"train_acc {record.train_acc:.4f}{val} ({record.seconds:.1f}s)")
    sys.stdout.flush()


def cmd_train(args):
    import numpy as np

    config = _resolve(args, require=("dataset", "labels", "out"))
    if config.repeats == 1:
        _train_once(config, config.out)
        return EXIT_OK
    reports = []
    for i in range(config.repeats):
        run = ExperimentConfig(**{
            **config.as_dict(),
            "seed_init": config.seed_init + i,
            "seed_shuffle": config.seed_shuffle + i,
            "seed_split": config.seed_split + i,
        })
        run_dir = os.path.join(config.out, f"run_{i + 1}")
        print(f"--- repeat {i + 1}/{config.repeats} ---")
        reports.append(_train_once(run, run_dir))
    summary = {"runs": config.repeats, "per_run": [
        {k: r[k] for k in ("oa", "aa", "kappa")} for r in reports]}
    for key in ("oa", "aa", "kappa"):
        values = np.array([r[key] for r in reports], dtype=np.float64)
        summary[key] = {"mean": float(values.mean()),
                        "std": float(values.std(ddof=1))}
        print(f"{key}: {summary[key]['mean']:.6f} +/- {summary[key]['std']:.6f}")
    with open(os.path.join(config.out, "summary.json"), "w", encoding="ascii") as fh:
        fh.write(json.dumps(summary, sort_keys=True, indent=2))
        fh.write("\n")
    return EXIT_OK


def _load_checkpoint_config(args, require):
    """Resolve config for checkpoint-consuming commands.

    Geometry fields (window, bands, variant, dropout, init seed) come from
    the checkpoint itself; pipeline fields come from the config file
    (defaulting to the config.json stored next to the checkpoint) and flags.
    """
    from . import model as model_mod

    if getattr(args, "config", None) is None:
        sibling = os.path.join(os.path.dirname(os.path.abspath(args.checkpoint)),
                               "config.json")
        if os.path.exists(sibling):
            args.config = sibling
    config = _resolve(args, require=require)
    model = model_mod.model_load(config.checkpoint)
    mcfg = model.config
    config.window = mcfg.window
    config.bands = mcfg.bands
    config.variant = mcfg.variant
    config.dropout = mcfg.dropout_rate
    config.seed_init = mcfg.seed
    return model, config


def cmd_evaluate(args):
    model, config = _load_checkpoint_config(
        args, require=("checkpoint", "dataset", "labels", "out"))
    os.makedirs(config.out, exist_ok=True)
    _print_resolved(config)
    _write_config(config, config.out)
    cube, _, test_set = _prepare_split(config)
    if cube.n_classes != model.config.classes:
        raise ConfigError(
            f"checkpoint expects {model.config.classes} classes, "
            f"label grid holds {cube.n_classes}")
    _evaluate_to_artifacts(model, test_set, config, config.out)
    return EXIT_OK


def cmd_map(args):
    import numpy as np

    from . import metrics, optim, pipeline

    model, config = _load_checkpoint_config(
        args, require=("checkpoint", "dataset", "labels", "out"))
    os.makedirs(config.out, exist_ok=True)
    _print_resolved(config)
    cube = pipeline.load_cube(config.dataset, config.labels)
    if cube.n_classes != model.config.classes:
        raise ConfigError(
            f"checkpoint expects {model.config.classes} classes, "
            f"label grid holds {cube.n_classes}")
    reduced = pipeline.pca_reduce(cube, config.bands, whiten=config.whiten)
    patches = pipeline.extract_patches(reduced, cube.labels, config.window,
                                       padding=pipeline.PAD_ZERO)
    _, accuracy, preds = optim.evaluate(model, patches, config.batch_size)
    grid = np.zeros((cube.height, cube.width), dtype=np.int64)
    cols = patches.origins[:, 0]
    rows = patches.origins[:, 1]
    grid[rows, cols] = preds + 1
    n_classes = model.config.classes
    metrics.write_ppm(os.path.join(config.out, "prediction.ppm"),
                      metrics.render_map(grid, n_classes))
    metrics.write_ppm(os.path.join(config.out, "ground_truth.ppm"),
                      metrics.render_map(cube.labels, n_classes))
    print(f"labeled pixels {len(patches)}, map-vs-ground-truth oa {accuracy:.6f}")
    return EXIT_OK


def cmd_info(args):
    from . import model as model_mod

    if args.checkpoint is not None:
        model = model_mod.model_load(args.checkpoint)
        mcfg = model.config
    else:
        missing = [n for n in ("window", "bands", "classes")
                   if getattr(args, n) is None]
        if missing:
            raise ConfigError(
                "info needs --checkpoint or all of --window/--bands/--classes "
                f"(missing {', '.join(missing)})")
        mcfg = model_mod.ModelConfig(
            window=args.window, bands=args.bands, classes=args.classes,
            dropout_rate=args.dropout if args.dropout is not None else _DEFAULTS["dropout"],
            variant=args.variant or _DEFAULTS["variant"])
    rows = model_mod.summary_rows(mcfg)
    name_w = max(len(r[0]) for r in rows)
    shape_w = max(len(str(r[1])) for r in rows)
    print(f"{'layer':<{name_w}}  {'output shape':<{shape_w}}  params")
    total = 0
    for name, shape, count in rows:
        print(f"{name:<{name_w}}  {str(shape):<{shape_w}}  {count}")
        total += count
    print(f"total trainable parameters: {total}")
    return EXIT_OK


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--threads", type=int, help="BLAS/OpenMP thread count")


def _add_data(p):
    p.add_argument("--dataset", help="HSC cube file")
    p.add_argument("--labels", help="HSG ground-truth file")
    p.add_argument("--out", help="output directory")


def _add_pipeline(p):
    p.add_argument("--bands", type=int, help="PCA spectral depth B")
    p.add_argument("--whiten", action=argparse.BooleanOptionalAction,
                   help="divide PCA projections by sqrt(eigenvalue)")
    p.add_argument("--padding", choices=["zero", "valid"],
                   help="patch extraction mode at scene borders")
    p.add_argument("--train-fraction", type=float, dest="train_fraction",
                   help="per-class fraction assigned to training")
    p.add_argument("--seed-split", type=int, dest="seed_split",
                   help="train/test split seed")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hsinet",
        description="Spectral-spatial hyperspectral image classifier")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and evaluate on the test split")
    _add_data(p)
    _add_pipeline(p)
    p.add_argument("--window", type=int, help="spatial patch side S (odd, >= 9)")
    p.add_argument("--variant", choices=["hybrid", "3d", "2d"],
                   help="architecture variant")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float, help="Adam learning rate")
    p.add_argument("--dropout", type=float, help="dropout rate for the dense stack")
    p.add_argument("--val-fraction", type=float, dest="val_fraction",
                   help="fraction of training patches held out for validation curves")
    p.add_argument("--seed-init", type=int, dest="seed_init",
                   help="weight initialization seed")
    p.add_argument("--seed-shuffle", type=int, dest="seed_shuffle",
                   help="epoch shuffling / dropout seed")
    p.add_argument("--repeats", type=int,
                   help="independent runs with incremented seeds; reports mean +/- std")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="re-evaluate a checkpoint on the test split")
    p.add_argument("--checkpoint", help="model checkpoint file")
    _add_data(p)
    _add_pipeline(p)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("map", help="render prediction and ground-truth maps")
    p.add_argument("--checkpoint", help="model checkpoint file")
    _add_data(p)
    p.add_argument("--whiten", action=argparse.BooleanOptionalAction)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    _add_common(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("info", help="print the per-layer summary table")
    p.add_argument("--checkpoint", help="model checkpoint file")
    p.add_argument("--window", type=int)
    p.add_argument("--bands", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--variant", choices=["hybrid", "3d", "2d"])
    _add_common(p)
    p.set_defaults(func=cmd_info)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    _apply_threads(getattr(args, "threads", None))
    try:
        return args.func(args)
    except (ConfigError, ParameterError, ShapeError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, LabelError, FormatError, MetricError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error [OSError]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HsiNetError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
