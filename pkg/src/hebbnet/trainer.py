"""Fast unsupervised training of the hidden-layer weights.

Instead of integrating the inhibited rate network for every stimulus, the
input currents themselves rank the hidden units: the top unit is pulled
toward the example (gate +1) and the k-th unit is pushed away (gate -delta).
Updates accumulate over a minibatch, are rescaled so the largest entry has
unit magnitude, and are then applied with the scheduled learning rate.  The
max-abs rescaling is what makes a single peak learning rate meaningful across
datasets; the raw accumulated magnitude is reported alongside so the
unnormalized rule stays observable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import Batch, Dataset, minibatches
from .plasticity import metric_image

__all__ = [
    "UnsupConfig",
    "BatchStats",
    "EpochStats",
    "TrainHistory",
    "rank_units",
    "rank_activations",
    "accumulate_increments",
    "batch_update",
    "lr_schedule",
    "train_unsupervised",
]


@dataclass(frozen=True)
class UnsupConfig:
    """Hyperparameters of the unsupervised phase (defaults tuned for MNIST)."""

    p: float = 4.0
    R: float = 1.0
    delta: float = 0.4
    k: int = 2
    hidden: int = 2000
    epochs: int = 100
    batch: int = 100
    lr0: float = 0.04
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.p >= 2.0:
            raise ValueError(f"norm power p must be >= 2, got {self.p}")
        if not self.R > 0.0:
            raise ValueError(f"sphere radius R must be > 0, got {self.R}")
        if self.delta < 0.0:
            raise ValueError(f"anti-Hebbian strength delta must be >= 0, got {self.delta}")
        if self.k < 2:
            raise ValueError(f"anti-Hebbian rank k must be >= 2, got {self.k}")
        if self.hidden < 1:
            raise ValueError(f"hidden unit count must be >= 1, got {self.hidden}")
        if self.epochs < 0:
            raise ValueError(f"epoch count must be >= 0, got {self.epochs}")
        if self.batch < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch}")
        if not self.lr0 > 0.0:
            raise ValueError(f"peak learning rate must be > 0, got {self.lr0}")


@dataclass(frozen=True)
class BatchStats:
    """Diagnostics for one applied minibatch update."""

    pre_scale_max_abs: float
    mean_abs_update: float
    degenerate: bool


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    lr: float
    sphere_deviation: float
    mean_update: float


@dataclass
class TrainHistory:
    """One record per completed epoch."""

    records: list[EpochStats] = field(default_factory=list)

    def append(self, record: EpochStats) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def rank_units(currents: np.ndarray) -> np.ndarray:
    """Unit indices sorted by descending current, ties to the lower index."""
    currents = np.asarray(currents)
    if not np.all(np.isfinite(currents)):
        raise ValueError("currents must be finite to rank")
    return np.argsort(-currents, kind="stable")


def rank_activations(rank: np.ndarray, delta: float, k: int) -> np.ndarray:
    """Gate vector for a ranking: +1 at the winner, -delta at rank k."""
    rank = np.asarray(rank)
    if k > len(rank):
        raise ValueError(f"anti-Hebbian rank k={k} exceeds unit count {len(rank)}")
    if k < 2:
        raise ValueError(f"anti-Hebbian rank k must be >= 2, got {k}")
    g = np.zeros(len(rank))
    g[rank[0]] = 1.0
    g[rank[k - 1]] = -delta
    return g


def _top_ranks(currents: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    # Winner and k-th place per row via repeated first-occurrence argmax,
    # which matches rank_units' stable tie-breaking without a full sort.
    work = currents.copy()
    rows = np.arange(work.shape[0])
    picked = np.argmax(work, axis=1)
    winners = picked
    for _ in range(k - 1):
        work[rows, picked] = -np.inf
        picked = np.argmax(work, axis=1)
    return winners, picked


def accumulate_increments(
    W: np.ndarray, V: np.ndarray, G: np.ndarray, R: float, p: float
) -> np.ndarray:
    """Sum of per-example increments ``g * (R**p * v - <w, v>_w * w)``.

    ``G`` holds the gate value of every (example, unit) pair.  Each weight
    row's increment depends only on that row, the examples, and its own gate
    column; rows never couple here (ranking, done by the caller, is the only
    cross-unit interaction).
    """
    currents = V @ metric_image(W, p).T
    return R**p * (G.T @ V) - (G * currents).sum(axis=0)[:, None] * W


def batch_update(
    W: np.ndarray, batch: Batch, cfg: UnsupConfig, lr: float | None = None
) -> tuple[np.ndarray, BatchStats]:
    """Ready-to-apply weight update for one minibatch.

    Per example, units are ranked by their currents and gated +1 / -delta /
    0; increments are summed over the batch, rescaled so the largest entry
    magnitude is 1, and multiplied by ``lr`` (default ``cfg.lr0``).  A batch
    whose accumulated update is identically zero is returned as zeros and
    flagged.
    """
    V = np.asarray(batch.examples, dtype=np.float64)
    if V.shape[1] != W.shape[1]:
        raise ValueError(f"weights {W.shape} and batch examples {V.shape} do not match")
    if lr is None:
        lr = cfg.lr0
    n_hidden = W.shape[0]

    currents = V @ metric_image(W, cfg.p).T
    G = np.zeros_like(currents)
    if cfg.k <= n_hidden:
        winners, kth = _top_ranks(currents, cfg.k)
        rows = np.arange(V.shape[0])
        G[rows, winners] = 1.0
        G[rows, kth] = -cfg.delta
    elif cfg.delta == 0.0:
        # No anti-Hebbian weight, so no rank-k slot is needed; tiny layers
        # (even a single unit) still train on the winner term alone.
        G[np.arange(V.shape[0]), np.argmax(currents, axis=1)] = 1.0
    else:
        raise ValueError(f"anti-Hebbian rank k={cfg.k} exceeds unit count {n_hidden}")

    raw = accumulate_increments(W, V, G, cfg.R, cfg.p)
    max_abs = float(np.max(np.abs(raw)))
    if max_abs == 0.0:
        return np.zeros_like(W), BatchStats(0.0, 0.0, degenerate=True)
    dW = raw * (lr / max_abs)
    return dW, BatchStats(max_abs, float(np.mean(np.abs(dW))), degenerate=False)


def lr_schedule(epoch: int, epochs: int, lr0: float) -> float:
    """Linear decay from ``lr0`` at epoch 0 to 0 at the final epoch."""
    if not 0 <= epoch < epochs:
        raise ValueError(f"epoch {epoch} outside [0, {epochs})")
    if epochs == 1:
        return lr0
    return lr0 * (1.0 - epoch / (epochs - 1.0))


def train_unsupervised(
    d: Dataset,
    cfg: UnsupConfig,
    on_epoch: Callable[[EpochStats, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, TrainHistory]:
    """Train hidden weights on a normalized dataset.

    Weights start from a standard normal draw (numpy default_rng on
    ``cfg.seed``) and receive one rescaled update per minibatch for
    ``cfg.epochs`` epochs.  ``on_epoch`` observes each epoch record and the
    current weights.  Identical config and seed replay identically.
    """
    W = np.random.default_rng(cfg.seed).standard_normal((cfg.hidden, d.n_features))
    history = TrainHistory()
    sphere_target = cfg.R**cfg.p
    for epoch in range(cfg.epochs):
        lr = lr_schedule(epoch, cfg.epochs, cfg.lr0)
        update_sizes: list[float] = []
        for batch in minibatches(d, cfg.batch, cfg.seed, epoch):
            dW, stats = batch_update(W, batch, cfg, lr)
            W += dW
            update_sizes.append(stats.mean_abs_update)
        deviation = float(np.max(np.abs((np.abs(W) ** cfg.p).sum(axis=1) - sphere_target)))
        record = EpochStats(
            epoch=epoch,
            lr=lr,
            sphere_deviation=deviation,
            mean_update=float(np.mean(update_sizes)) if update_sizes else 0.0,
        )
        history.append(record)
        if on_epoch is not None:
            on_epoch(record, W)
    return W, history
