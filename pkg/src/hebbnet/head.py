"""Supervised readout on top of frozen features, plus the end-to-end baseline.

Forward pass: hidden codes ``h = f(W v)`` with the rectified power activation
``f(x) = x**n`` for x >= 0 (n = 1 is ReLU), outputs ``c = tanh(S h)``.  Note
the plain dot product here; the p-metric belongs to the unsupervised phase
only.  The loss is ``sum_alpha |c_alpha - t_alpha|**m`` against +/-1 one-hot
targets, summed over the examples of a minibatch, and is minimized with an
adaptive-moment optimizer written out below so its update can be tested in
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import Dataset, minibatches

__all__ = [
    "SupConfig",
    "CurvePoint",
    "AdamState",
    "one_hot",
    "power_activation",
    "forward",
    "loss",
    "grad_head",
    "grad_e2e",
    "adam_step",
    "train_head",
    "train_e2e_baseline",
    "evaluate",
    "confusion_counts",
]

Arrays = Sequence[np.ndarray]


@dataclass(frozen=True)
class SupConfig:
    """Hyperparameters of the supervised phase (defaults tuned for MNIST).

    ``lr_table`` is a step schedule: (first epoch, learning rate) pairs with
    ascending epochs starting at 0.
    """

    n: float = 4.5
    m: int = 10
    epochs: int = 300
    batch: int = 100
    lr_table: tuple[tuple[int, float], ...] = (
        (0, 0.001),
        (100, 0.0005),
        (150, 0.0001),
        (200, 0.00005),
        (250, 0.00001),
    )
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.n >= 1.0:
            raise ValueError(f"activation power n must be >= 1, got {self.n}")
        if self.m < 2:
            raise ValueError(f"loss power m must be an integer >= 2, got {self.m}")
        if self.epochs < 0:
            raise ValueError(f"epoch count must be >= 0, got {self.epochs}")
        if self.batch < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch}")
        if not self.lr_table or self.lr_table[0][0] != 0:
            raise ValueError("lr_table must start with an entry for epoch 0")
        starts = [e for e, _ in self.lr_table]
        if starts != sorted(set(starts)):
            raise ValueError(f"lr_table epochs must be strictly ascending, got {starts}")
        if any(lr <= 0 for _, lr in self.lr_table):
            raise ValueError("lr_table rates must be > 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("moment decays must lie in [0, 1)")

    def lr_at(self, epoch: int) -> float:
        lr = self.lr_table[0][1]
        for start, value in self.lr_table:
            if epoch >= start:
                lr = value
        return lr


@dataclass(frozen=True)
class CurvePoint:
    epoch: int
    train_error: float
    test_error: float
    loss: float


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """+/-1 one-hot target rows: +1 at the label, -1 elsewhere."""
    targets = -np.ones((len(labels), n_classes))
    targets[np.arange(len(labels)), labels] = 1.0
    return targets


def power_activation(x: np.ndarray | float, n: float):
    """Rectified power ``x**n`` for x >= 0, zero below."""
    return np.maximum(x, 0.0) ** n


def _power_derivative(x: np.ndarray, n: float) -> np.ndarray:
    # d/dx of the rectified power; defined 0 at x <= 0.
    return np.where(x > 0.0, n * np.maximum(x, 0.0) ** (n - 1.0), 0.0)


def forward(
    W: np.ndarray, S: np.ndarray, v: np.ndarray, n: float
) -> tuple[np.ndarray, np.ndarray]:
    """Hidden codes and outputs for one example or a batch of rows."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != W.shape[1]:
        raise ValueError(f"input dim {v.shape[-1]} does not match weights {W.shape}")
    if S.shape[1] != W.shape[0]:
        raise ValueError(f"head {S.shape} does not match {W.shape[0]} hidden units")
    h = power_activation(v @ W.T, n)
    return h, np.tanh(h @ S.T)


def loss(c: np.ndarray, t: np.ndarray, m: int) -> float:
    """``sum |c - t|**m`` over all outputs (and all examples, if batched)."""
    c = np.asarray(c, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if c.shape != t.shape:
        raise ValueError(f"outputs {c.shape} and targets {t.shape} do not match")
    return float(np.sum(np.abs(c - t) ** m))


def _doutput(c: np.ndarray, t: np.ndarray, m: int) -> np.ndarray:
    # Gradient of the loss through the tanh, per output: the |e|**(m-1) factor
    # carries sign(e) so it is exactly 0 at e = 0 for m >= 2.
    e = c - t
    return m * np.sign(e) * np.abs(e) ** (m - 1) * (1.0 - c * c)


def grad_head(h: np.ndarray, c: np.ndarray, t: np.ndarray, m: int) -> np.ndarray:
    """Exact loss gradient with respect to the head matrix, h held fixed."""
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    t = np.atleast_2d(np.asarray(t, dtype=np.float64))
    return _doutput(c, t, m).T @ h


def grad_e2e(
    W: np.ndarray,
    S: np.ndarray,
    v: np.ndarray,
    t: np.ndarray,
    n: float,
    m: int,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Loss and exact gradients for both layers on a batch of examples."""
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    t = np.atleast_2d(np.asarray(t, dtype=np.float64))
    pre = v @ W.T
    h = power_activation(pre, n)
    c = np.tanh(h @ S.T)
    dz = _doutput(c, t, m)
    grad_S = dz.T @ h
    dh = dz @ S
    grad_W = (dh * _power_derivative(pre, n)).T @ v
    return grad_W, grad_S, loss(c, t, m)


@dataclass(frozen=True)
class AdamState:
    """First/second moment estimates and step counter."""

    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Arrays) -> "AdamState":
        return cls(
            m=tuple(np.zeros_like(p) for p in params),
            v=tuple(np.zeros_like(p) for p in params),
        )


def adam_step(
    params: Arrays,
    grads: Arrays,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[list[np.ndarray], AdamState]:
    """One adaptive-moment update with bias correction.

    Pure function: new parameter arrays and a new state are returned, so
    identical calls from identical state give identical results.
    """
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} params but {len(grads)} grads")
    t = state.t + 1
    new_m, new_v, new_params = [], [], []
    for p, g, m1, v1 in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"param {p.shape} and grad {g.shape} do not match")
        m1 = beta1 * m1 + (1.0 - beta1) * g
        v1 = beta2 * v1 + (1.0 - beta2) * g * g
        m_hat = m1 / (1.0 - beta1**t)
        v_hat = v1 / (1.0 - beta2**t)
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m1)
        new_v.append(v1)
    return new_params, AdamState(m=tuple(new_m), v=tuple(new_v), t=t)


def _init_head(n_classes: int, n_hidden: int, seed: int) -> np.ndarray:
    # Uniform in +/- 1/sqrt(K): keeps tanh unsaturated at the start.
    bound = 1.0 / np.sqrt(n_hidden)
    return np.random.default_rng(seed).uniform(-bound, bound, size=(n_classes, n_hidden))


def _error_rate(codes: np.ndarray, S: np.ndarray, labels: np.ndarray) -> float:
    preds = np.argmax(codes @ S.T, axis=1)
    return float(np.mean(preds != labels))


def train_head(
    W: np.ndarray,
    d: Dataset,
    cfg: SupConfig,
    eval_data: Dataset | None = None,
    precompute_codes: bool = True,
    on_epoch: Callable[[CurvePoint], None] | None = None,
) -> tuple[np.ndarray, list[CurvePoint]]:
    """Train the head on frozen features.

    Hidden codes are computed once up front (W never changes); passing
    ``precompute_codes=False`` recomputes them per step instead and must give
    bit-identical results.  Curves carry per-epoch train error, test error
    (NaN without ``eval_data``) and summed train loss.
    """
    if d.n_features != W.shape[1]:
        raise ValueError(f"dataset dim {d.n_features} does not match weights {W.shape}")
    targets = one_hot(d.labels, d.n_classes)
    codes = power_activation(d.examples @ W.T, cfg.n) if precompute_codes else None
    eval_codes = (
        power_activation(eval_data.examples @ W.T, cfg.n) if eval_data is not None else None
    )

    S = _init_head(d.n_classes, W.shape[0], cfg.seed)
    state = AdamState.zeros_like([S])
    curves: list[CurvePoint] = []
    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        epoch_loss = 0.0
        for batch in minibatches(d, cfg.batch, cfg.seed, epoch):
            if codes is not None:
                h = codes[batch.indices]
            else:
                h = power_activation(batch.examples @ W.T, cfg.n)
            c = np.tanh(h @ S.T)
            t = targets[batch.indices]
            epoch_loss += loss(c, t, cfg.m)
            grad = grad_head(h, c, t, cfg.m)
            (S,), state = adam_step([S], [grad], state, lr, cfg.beta1, cfg.beta2, cfg.eps)
        train_codes = codes if codes is not None else power_activation(d.examples @ W.T, cfg.n)
        point = CurvePoint(
            epoch=epoch,
            train_error=_error_rate(train_codes, S, d.labels),
            test_error=(
                _error_rate(eval_codes, S, eval_data.labels) if eval_data is not None else float("nan")
            ),
            loss=epoch_loss,
        )
        curves.append(point)
        if on_epoch is not None:
            on_epoch(point)
    return S, curves


def train_e2e_baseline(
    d: Dataset,
    arch: tuple[int, int, int],
    cfg: SupConfig,
    eval_data: Dataset | None = None,
    on_epoch: Callable[[CurvePoint], None] | None = None,
) -> tuple[np.ndarray, np.ndarray, list[CurvePoint]]:
    """Backprop both layers from random weights with the same loss.

    The first layer starts from normal draws scaled by 1/sqrt(D); the head
    starts as in ``train_head``.
    """
    n_inputs, n_hidden, n_classes = arch
    if n_hidden < 1:
        raise ValueError(f"hidden unit count must be >= 1, got {n_hidden}")
    if n_inputs != d.n_features or n_classes != d.n_classes:
        raise ValueError(f"architecture {arch} does not match dataset ({d.n_features}, {d.n_classes})")
    rng = np.random.default_rng(cfg.seed)
    W = rng.standard_normal((n_hidden, n_inputs)) / np.sqrt(n_inputs)
    S = _init_head(n_classes, n_hidden, cfg.seed)
    targets = one_hot(d.labels, d.n_classes)

    state = AdamState.zeros_like([W, S])
    curves: list[CurvePoint] = []
    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        epoch_loss = 0.0
        for batch in minibatches(d, cfg.batch, cfg.seed, epoch):
            grad_W, grad_S, batch_loss = grad_e2e(
                W, S, batch.examples, targets[batch.indices], cfg.n, cfg.m
            )
            epoch_loss += batch_loss
            (W, S), state = adam_step(
                [W, S], [grad_W, grad_S], state, lr, cfg.beta1, cfg.beta2, cfg.eps
            )
        point = CurvePoint(
            epoch=epoch,
            train_error=evaluate(W, S, d, cfg.n),
            test_error=(evaluate(W, S, eval_data, cfg.n) if eval_data is not None else float("nan")),
            loss=epoch_loss,
        )
        curves.append(point)
        if on_epoch is not None:
            on_epoch(point)
    return W, S, curves


def evaluate(W: np.ndarray, S: np.ndarray, d: Dataset, n: float) -> float:
    """Fraction of examples whose top output disagrees with the label.

    Ties at the top go to the lowest class index.
    """
    _, c = forward(W, S, d.examples, n)
    preds = np.argmax(c, axis=1)
    return float(np.mean(preds != d.labels))


def confusion_counts(W: np.ndarray, S: np.ndarray, d: Dataset, n: float) -> np.ndarray:
    """Confusion matrix: entry [true, predicted] counts examples."""
    _, c = forward(W, S, d.examples, n)
    preds = np.argmax(c, axis=1)
    counts = np.zeros((d.n_classes, d.n_classes), dtype=np.int64)
    np.add.at(counts, (d.labels, preds), 1)
    return counts
