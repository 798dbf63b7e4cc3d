"""Matplotlib renderings of the delimited outputs, written next to them."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .head import CurvePoint
from .trainer import EpochStats

__all__ = [
    "plot_history",
    "plot_curves",
    "plot_sweep",
    "plot_confusion",
    "plot_activities",
]


def plot_history(records: Sequence[EpochStats], path: str | Path) -> Path:
    """Learning rate and sphere deviation over the unsupervised epochs."""
    path = Path(path)
    epochs = [r.epoch for r in records]
    fig, (ax_lr, ax_dev) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_lr.plot(epochs, [r.lr for r in records], color="tab:blue")
    ax_lr.set_xlabel("epoch")
    ax_lr.set_ylabel("learning rate")
    ax_dev.semilogy(epochs, [max(r.sphere_deviation, 1e-16) for r in records], color="tab:red")
    ax_dev.set_xlabel("epoch")
    ax_dev.set_ylabel("max sphere deviation")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_curves(curves: Sequence[CurvePoint], path: str | Path) -> Path:
    """Train/test error (percent) and summed loss over supervised epochs."""
    path = Path(path)
    epochs = [c.epoch for c in curves]
    fig, (ax_err, ax_loss) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_err.plot(epochs, [100.0 * c.train_error for c in curves], label="train", color="tab:blue")
    test = [100.0 * c.test_error for c in curves]
    if not all(np.isnan(test)):
        ax_err.plot(epochs, test, label="test", color="tab:red")
    ax_err.set_xlabel("epoch")
    ax_err.set_ylabel("error [%]")
    ax_err.legend()
    ax_loss.semilogy(epochs, [max(c.loss, 1e-16) for c in curves], color="tab:green")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("train loss")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(rows: Sequence[tuple[float, float, float]], path: str | Path) -> Path:
    """Final errors against the activation power."""
    path = Path(path)
    ns = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ns, [100.0 * r[1] for r in rows], "o-", label="train", color="tab:blue")
    ax.plot(ns, [100.0 * r[2] for r in rows], "o-", label="test", color="tab:red")
    ax.set_xlabel("activation power n")
    ax.set_ylabel("error [%]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_confusion(counts: np.ndarray, path: str | Path) -> Path:
    """Confusion-count heat map."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(counts, cmap="viridis")
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_activities(
    currents: np.ndarray, h: np.ndarray, g: np.ndarray, path: str | Path
) -> Path:
    """Currents and steady activities per unit, ordered by current."""
    path = Path(path)
    order = np.argsort(-currents, kind="stable")
    x = np.arange(len(order))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(x, currents[order], "o-", label="current", color="tab:blue")
    ax.plot(x, h[order], "s-", label="steady h", color="tab:red")
    active = g[order] != 0.0
    if active.any():
        ax.scatter(x[active], h[order][active], marker="x", s=80, color="black", label="gated")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_xlabel("units by current rank")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
