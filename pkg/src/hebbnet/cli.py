"""Command-line front end.

Subcommands cover both training phases, evaluation, the rate-network
simulator, the activation-power sweep and weight-image export.  Every
delimited output (CSV, JSON) gets a rendered matplotlib figure written next
to it.  Outputs are written to temporary files and renamed into place, so a
failing run leaves no partial artifacts.

Exit codes: 0 success, 2 usage or validation, 3 data format, 4 solver
non-convergence, 5 I/O.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any

import numpy as np

from . import figures
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import PRESETS, RunConfig, build_config, config_to_dict
from .data import Dataset, load_cifar10, load_mnist, normalize
from .dynamics import compute_currents, integrate_to_steady, learning_activations
from .errors import EXIT_OK, ConsistencyError, UsageError, exit_code_for
from .head import confusion_counts, evaluate, train_e2e_baseline, train_head
from .plasticity import LearningActivation
from .ppm import export_weight_images
from .trainer import rank_units, train_unsupervised

__all__ = ["main", "build_parser"]


# ----------------------------------------------------------------------
# atomic output helpers

def _replace_into(tmp: Path, final: Path) -> None:
    os.replace(tmp, final)


def _write_text(path: Path, text: str) -> Path:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    _replace_into(tmp, path)
    return path


@contextmanager
def _csv_writer(path: Path, header: list[str]):
    """Stream rows to ``<path>.tmp``; rename on clean exit, drop on error."""
    tmp = path.with_name(path.name + ".tmp")
    handle: IO[str] = open(tmp, "w", newline="")
    writer = csv.writer(handle)
    writer.writerow(header)
    try:
        yield writer
    except BaseException:
        handle.close()
        tmp.unlink(missing_ok=True)
        raise
    handle.close()
    _replace_into(tmp, path)


def _save_checkpoint(ckpt: Checkpoint, path: Path) -> Path:
    tmp = path.with_name(path.name + ".tmp")
    save_checkpoint(ckpt, tmp)
    _replace_into(tmp.with_name(tmp.name + ".json"), path.with_name(path.name + ".json"))
    _replace_into(tmp, path)
    return path


def _render(plot_fn, data, path: Path) -> Path:
    tmp = path.with_name(path.name + ".tmp.png")
    plot_fn(data, tmp)
    _replace_into(tmp, path)
    return path


# ----------------------------------------------------------------------
# dataset plumbing

def _cifar_paths(cifar_dir: str, names: list[str]) -> list[Path]:
    root = Path(cifar_dir)
    found = []
    for name in names:
        for candidate in (root / f"{name}.bin", root / name):
            if candidate.exists():
                found.append(candidate)
                break
        else:
            raise UsageError(f"missing CIFAR-10 batch file {name}(.bin) under {root}")
    return found


def _load_split(cfg: RunConfig, which: str) -> Dataset:
    if cfg.cifar_dir and (cfg.mnist_images or cfg.mnist_labels):
        raise UsageError("give either MNIST paths or --cifar-dir, not both")
    if cfg.cifar_dir:
        if which == "train":
            paths = _cifar_paths(cfg.cifar_dir, [f"data_batch_{i}" for i in range(1, 6)])
        else:
            paths = _cifar_paths(cfg.cifar_dir, ["test_batch"])
        raw = load_cifar10(paths)
    else:
        images = cfg.mnist_images if which == "train" else cfg.mnist_test_images
        labels = cfg.mnist_labels if which == "train" else cfg.mnist_test_labels
        if not images or not labels:
            raise UsageError(
                f"missing dataset path: no {which} images/labels given "
                "(use --mnist-images/--mnist-labels[/--mnist-test-*] or --cifar-dir)"
            )
        raw = load_mnist(images, labels)
    return normalize(raw, cfg.normalize, cfg.scale_divisor)


def _maybe_test_split(cfg: RunConfig) -> Dataset | None:
    if cfg.cifar_dir:
        try:
            return _load_split(cfg, "test")
        except UsageError:
            return None
    if cfg.mnist_test_images and cfg.mnist_test_labels:
        return _load_split(cfg, "test")
    return None


def _require_weights(ckpt: Checkpoint, path: str) -> np.ndarray:
    if ckpt.W is None:
        raise ConsistencyError(f"{path}: checkpoint holds no hidden weight matrix")
    return ckpt.W


def _check_dims(W: np.ndarray, d: Dataset, path: str) -> None:
    if W.shape[1] != d.n_features:
        raise ConsistencyError(
            f"{path}: checkpoint expects {W.shape[1]} inputs but dataset has {d.n_features}"
        )


def _meta(cfg: RunConfig, **extra: Any) -> dict:
    meta = {"config": config_to_dict(cfg)}
    meta.update(extra)
    return meta


# ----------------------------------------------------------------------
# commands

def cmd_train_unsup(cfg: RunConfig, out: Path) -> None:
    train = _load_split(cfg, "train")
    if cfg.grid_rows * cfg.grid_cols > cfg.unsup.hidden:
        raise UsageError(
            f"weight grid {cfg.grid_rows}x{cfg.grid_cols} needs more units than hidden={cfg.unsup.hidden}"
        )
    with _csv_writer(out / "history.csv", ["epoch", "lr", "sphere_deviation", "mean_update"]) as rows:

        def on_epoch(record, W):
            rows.writerow([record.epoch, f"{record.lr:.10g}",
                           f"{record.sphere_deviation:.10g}", f"{record.mean_update:.10g}"])
            print(
                f"[train-unsup] epoch {record.epoch + 1}/{cfg.unsup.epochs} "
                f"lr={record.lr:.5f} sphere_dev={record.sphere_deviation:.3e}",
                file=sys.stderr,
            )
            if cfg.image_every and (record.epoch + 1) % cfg.image_every == 0:
                export_weight_images(
                    W, cfg.grid_rows, cfg.grid_cols,
                    out / f"weights_epoch_{record.epoch + 1:04d}.ppm",
                    cfg.select, cfg.unsup.seed,
                )

        W, history = train_unsupervised(train, cfg.unsup, on_epoch=on_epoch)

    tail = [dataclasses.asdict(r) for r in history.records[-10:]]
    ckpt = Checkpoint(W=W, n_classes=train.n_classes,
                      meta=_meta(cfg, phase="unsupervised", epochs=cfg.unsup.epochs,
                                 history_tail=tail))
    _save_checkpoint(ckpt, out / "unsup_checkpoint.ckpt")
    export_weight_images(W, cfg.grid_rows, cfg.grid_cols, out / "weights_final.ppm",
                         cfg.select, cfg.unsup.seed)
    _render(figures.plot_history, history.records, out / "history.png")
    print(f"wrote {out / 'unsup_checkpoint.ckpt'}")


def _train_supervised(cfg: RunConfig, out: Path, command: str, ckpt_path: str | None) -> None:
    train = _load_split(cfg, "train")
    test = _maybe_test_split(cfg)
    header = ["epoch", "train_error", "test_error", "loss"]

    with _csv_writer(out / "curves.csv", header) as rows:

        def on_epoch(point):
            rows.writerow([point.epoch, f"{point.train_error:.10g}",
                           f"{point.test_error:.10g}", f"{point.loss:.10g}"])
            test_part = "" if np.isnan(point.test_error) else f" test={100 * point.test_error:.2f}%"
            print(
                f"[{command}] epoch {point.epoch + 1}/{cfg.sup.epochs} "
                f"train={100 * point.train_error:.2f}%{test_part}",
                file=sys.stderr,
            )

        if command == "train-sup":
            ckpt = load_checkpoint(ckpt_path)
            W = _require_weights(ckpt, ckpt_path)
            _check_dims(W, train, ckpt_path)
            S, curves = train_head(W, train, cfg.sup, eval_data=test, on_epoch=on_epoch)
            out_name = "sup_checkpoint.ckpt"
        else:
            arch = (train.n_features, cfg.unsup.hidden, train.n_classes)
            W, S, curves = train_e2e_baseline(train, arch, cfg.sup, eval_data=test,
                                              on_epoch=on_epoch)
            out_name = "e2e_checkpoint.ckpt"

    meta = _meta(cfg, phase=command, epochs=cfg.sup.epochs,
                 final_train_error=curves[-1].train_error if curves else None,
                 final_test_error=curves[-1].test_error if curves else None)
    _save_checkpoint(Checkpoint(W=W, S=S, n_classes=train.n_classes, meta=meta), out / out_name)
    _render(figures.plot_curves, curves, out / "curves.png")
    print(f"wrote {out / out_name}")


def cmd_eval(cfg: RunConfig, out: Path, args: argparse.Namespace) -> None:
    ckpt = load_checkpoint(args.checkpoint)
    W = _require_weights(ckpt, args.checkpoint)
    if ckpt.S is None:
        raise ConsistencyError(f"{args.checkpoint}: checkpoint holds no head matrix")
    data = _load_split(cfg, args.on)
    _check_dims(W, data, args.checkpoint)
    n = args.n if args.n is not None else _sidecar_n(ckpt, cfg)

    error = evaluate(W, ckpt.S, data, n)
    counts = confusion_counts(W, ckpt.S, data, n)
    report = {
        "dataset": data.name,
        "n_examples": len(data),
        "activation_power": n,
        "error_rate": error,
        "error_percent": 100.0 * error,
        "confusion": counts.tolist(),
    }
    _write_text(out / "report.json", json.dumps(report, indent=2) + "\n")
    _render(figures.plot_confusion, counts, out / "confusion.png")
    print(f"error: {100.0 * error:.2f}% ({len(data)} examples)")


def _sidecar_n(ckpt: Checkpoint, cfg: RunConfig) -> float:
    stored = ckpt.meta.get("config", {}).get("sup", {}).get("n")
    return float(stored) if stored is not None else cfg.sup.n


def cmd_simulate(cfg: RunConfig, out: Path, args: argparse.Namespace) -> None:
    if args.checkpoint:
        W = _require_weights(load_checkpoint(args.checkpoint), args.checkpoint)
        data = _load_split(cfg, args.on)
        _check_dims(W, data, args.checkpoint)
        index = args.example_index
        if not 0 <= index < len(data):
            raise UsageError(f"--example-index {index} outside dataset of {len(data)}")
        currents = compute_currents(W, data.examples[index], cfg.unsup.p)
    else:
        currents = np.random.default_rng(cfg.unsup.seed).standard_normal(cfg.unsup.hidden)

    state = integrate_to_steady(currents, cfg.dynamics)
    act = LearningActivation(form="threshold", delta=cfg.unsup.delta, h_star=args.hstar)
    g = learning_activations(state, act)
    order = rank_units(currents)
    position = np.empty(len(order), dtype=np.int64)
    position[order] = np.arange(len(order))

    with _csv_writer(out / "simulate.csv",
                     ["unit", "current", "h_steady", "g", "rank_by_current"]) as rows:
        for unit in range(len(currents)):
            rows.writerow([unit, f"{currents[unit]:.10g}", f"{state.h[unit]:.10g}",
                           f"{g[unit]:.10g}", position[unit]])
    tmp = out / "activities.png.tmp.png"
    figures.plot_activities(currents, state.h, g, tmp)
    _replace_into(tmp, out / "activities.png")
    print(f"simulated {len(currents)} units, {int((state.h > 0).sum())} active at steady state")


def cmd_sweep_n(cfg: RunConfig, out: Path, args: argparse.Namespace) -> None:
    n_list = cfg.n_list
    if args.n_list:
        n_list = tuple(float(x) for x in args.n_list.split(","))
    if not n_list:
        raise UsageError("no activation powers: give --n-list or config n_list")
    ckpt = load_checkpoint(args.checkpoint)
    W = _require_weights(ckpt, args.checkpoint)
    train = _load_split(cfg, "train")
    test = _maybe_test_split(cfg)
    _check_dims(W, train, args.checkpoint)

    results: list[tuple[float, float, float]] = []
    with _csv_writer(out / "sweep.csv", ["n", "train_error", "test_error"]) as rows:
        for n in n_list:
            table = cfg.sweep_lr_tables.get(str(n))
            sup = dataclasses.replace(
                cfg.sup, n=n,
                lr_table=tuple((int(e), float(lr)) for e, lr in table) if table else cfg.sup.lr_table,
            )
            S, curves = train_head(W, train, sup, eval_data=test)
            final = curves[-1]
            test_error = final.test_error if test is not None else float("nan")
            results.append((n, final.train_error, test_error))
            rows.writerow([f"{n:g}", f"{final.train_error:.10g}", f"{test_error:.10g}"])
            print(f"[sweep-n] n={n:g} train={100 * final.train_error:.2f}% "
                  f"test={100 * test_error:.2f}%", file=sys.stderr)
    _render(figures.plot_sweep, results, out / "sweep.png")
    print(f"wrote {out / 'sweep.csv'}")


def cmd_export_weights(cfg: RunConfig, out: Path, args: argparse.Namespace) -> None:
    ckpt = load_checkpoint(args.checkpoint)
    W = _require_weights(ckpt, args.checkpoint)
    target = Path(args.out_image) if args.out_image else out / "weights_grid.ppm"
    paths = export_weight_images(W, cfg.grid_rows, cfg.grid_cols, target,
                                 cfg.select, cfg.unsup.seed)
    for p in paths:
        print(f"wrote {p}")


# ----------------------------------------------------------------------
# argument parsing

_OVERRIDE_FLAGS = [
    # (flag, dest, type, target)
    ("--p", "p", float, "unsup.p"),
    ("--delta", "delta", float, "unsup.delta"),
    ("--k", "k", int, "unsup.k"),
    ("--hidden", "hidden", int, "unsup.hidden"),
    ("--lr0", "lr0", float, "unsup.lr0"),
    ("--epochs", "epochs", int, "phase.epochs"),
    ("--batch", "batch", int, "phase.batch"),
    ("--n", "n", float, "sup.n"),
    ("--m", "m", int, "sup.m"),
    ("--winh", "winh", float, "dynamics.w_inh"),
    ("--tau", "tau", float, "dynamics.tau"),
    ("--dt", "dt", float, "dynamics.dt"),
]

_DATA_FLAGS = [
    ("--mnist-images", "mnist_images"),
    ("--mnist-labels", "mnist_labels"),
    ("--mnist-test-images", "mnist_test_images"),
    ("--mnist-test-labels", "mnist_test_labels"),
    ("--cifar-dir", "cifar_dir"),
]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named hyperparameter preset")
    parser.add_argument("--seed", type=int, help="seed for both training phases")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--normalize", choices=["scale01", "unit_l2"])
    for flag, dest in _DATA_FLAGS:
        parser.add_argument(flag, dest=dest)
    for flag, dest, typ, _ in _OVERRIDE_FLAGS:
        parser.add_argument(flag, dest=dest, type=typ)
    parser.add_argument("--grid-rows", dest="grid_rows", type=int)
    parser.add_argument("--grid-cols", dest="grid_cols", type=int)
    parser.add_argument("--select", choices=["first", "random"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hebbnet",
        description="Competitive Hebbian feature learning with a supervised readout.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-unsup", help="unsupervised training of the hidden weights")
    _add_common(p)
    p.add_argument("--image-every", dest="image_every", type=int,
                   help="write a weight grid every N epochs (0: final only)")

    p = sub.add_parser("train-sup", help="train the head on a frozen checkpoint")
    _add_common(p)
    p.add_argument("--checkpoint", required=True, help="checkpoint holding the hidden weights")

    p = sub.add_parser("train-e2e", help="backprop baseline trained end to end")
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate a trained checkpoint on a dataset")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--on", choices=["train", "test"], default="train",
                   help="which split of the given dataset files to use")

    p = sub.add_parser("simulate", help="integrate the inhibited rate network to steady state")
    _add_common(p)
    p.add_argument("--checkpoint", help="take currents from this checkpoint and an example")
    p.add_argument("--example-index", dest="example_index", type=int, default=0)
    p.add_argument("--on", choices=["train", "test"], default="train")
    p.add_argument("--hstar", type=float, default=1.0,
                   help="threshold of the learning gate (default 1.0)")

    p = sub.add_parser("sweep-n", help="retrain the head across activation powers")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n-list", dest="n_list", help="comma-separated powers, e.g. 1,3,4.5")

    p = sub.add_parser("export-weights", help="render a checkpoint's weights as PPM grids")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out-image", dest="out_image", help="explicit output image path")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides: dict[str, Any] = {}
    phase = "unsup" if args.command == "train-unsup" else "sup"
    for _, dest, _, target in _OVERRIDE_FLAGS:
        value = getattr(args, dest, None)
        if value is not None:
            overrides[target.replace("phase", phase)] = value
    for _, dest in _DATA_FLAGS:
        if getattr(args, dest, None) is not None:
            overrides[dest] = getattr(args, dest)
    for dest in ("seed", "normalize", "grid_rows", "grid_cols", "select", "image_every"):
        value = getattr(args, dest, None)
        if value is not None:
            overrides[dest] = value
    overrides["out_dir"] = args.out
    return build_config(args.preset, args.config, overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "train-unsup":
            cmd_train_unsup(cfg, out)
        elif args.command in ("train-sup", "train-e2e"):
            _train_supervised(cfg, out, args.command, getattr(args, "checkpoint", None))
        elif args.command == "eval":
            cmd_eval(cfg, out, args)
        elif args.command == "simulate":
            cmd_simulate(cfg, out, args)
        elif args.command == "sweep-n":
            cmd_sweep_n(cfg, out, args)
        elif args.command == "export-weights":
            cmd_export_weights(cfg, out, args)
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001  (mapped onto documented exit codes)
        code = exit_code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
