"""Rate dynamics of the hidden layer under global inhibition.

Each hidden unit integrates its input current while every other unit's firing
rate pushes it down:

    tau * dh_mu/dt = I_mu - w_inh * sum_{nu != mu} relu(h_nu) - h_mu,

with ``I_mu = <w_mu, v>_w`` the p-metric current.  Run to steady state, the
competition leaves a small set of units above zero; their activities feed the
threshold learning gate.  The defaults below are experimental knobs: the fast
training path never integrates these equations, so no tuned values exist for
them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .plasticity import LearningActivation, metric_image

__all__ = [
    "DynamicsConfig",
    "HiddenState",
    "compute_currents",
    "integrate_to_steady",
    "learning_activations",
]


@dataclass(frozen=True)
class DynamicsConfig:
    """Integration parameters for the inhibited rate network."""

    w_inh: float = 1.0
    tau: float = 1.0
    dt: float = 0.1
    max_steps: int = 20000
    tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.w_inh < 0.0:
            raise ValueError(f"inhibition strength must be >= 0, got {self.w_inh}")
        if not self.tau > 0.0:
            raise ValueError(f"time constant tau must be > 0, got {self.tau}")
        if not 0.0 < self.dt < self.tau:
            raise ValueError(f"step dt must satisfy 0 < dt < tau, got dt={self.dt} tau={self.tau}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if not self.tol > 0.0:
            raise ValueError(f"tolerance must be > 0, got {self.tol}")


@dataclass(frozen=True)
class HiddenState:
    """Steady-state activities ``h`` with the currents that produced them."""

    h: np.ndarray
    currents: np.ndarray

    def __post_init__(self) -> None:
        if self.h.shape != self.currents.shape:
            raise ValueError(
                f"h and currents must have equal shapes, got {self.h.shape} and {self.currents.shape}"
            )


def compute_currents(W: np.ndarray, v: np.ndarray, p: float) -> np.ndarray:
    """Input currents ``I_mu = <w_mu, v>_w`` for every hidden unit."""
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or W.shape[1] != v.shape[0]:
        raise ValueError(f"weight matrix {W.shape} and input {v.shape} do not match")
    return metric_image(W, p) @ v


def _rhs(h: np.ndarray, currents: np.ndarray, w_inh: float) -> np.ndarray:
    rates = np.maximum(h, 0.0)
    total = rates.sum(axis=-1, keepdims=True)
    return currents - w_inh * (total - rates) - h


def integrate_to_steady(currents: np.ndarray, cfg: DynamicsConfig) -> HiddenState:
    """Forward-Euler integration from h = 0 until the fixed point.

    ``currents`` may be a single vector or a stack of independent current
    vectors, integrated together.  Convergence means the right-hand side of
    the rate equation is below ``cfg.tol`` everywhere; hitting ``max_steps``
    first raises ``ConvergenceError`` carrying the final residual.
    """
    currents = np.asarray(currents, dtype=np.float64)
    if currents.ndim not in (1, 2):
        raise ValueError(f"currents must be a vector or a stack of vectors, got ndim={currents.ndim}")
    h = np.zeros_like(currents)
    step = cfg.dt / cfg.tau
    for _ in range(cfg.max_steps):
        rhs = _rhs(h, currents, cfg.w_inh)
        residual = float(np.max(np.abs(rhs)))
        if residual < cfg.tol:
            return HiddenState(h=h, currents=currents.copy())
        h += step * rhs
    residual = float(np.max(np.abs(_rhs(h, currents, cfg.w_inh))))
    raise ConvergenceError(
        f"no steady state within {cfg.max_steps} steps (residual {residual:.3e}, tol {cfg.tol:.3e})",
        residual=residual,
    )


def learning_activations(state: HiddenState, act: LearningActivation) -> np.ndarray:
    """Per-unit gate values read off the steady-state activities.

    Units at or above ``h_star`` get +1, units strictly between 0 and
    ``h_star`` get -delta, and units at or below zero do not learn.
    """
    if act.form != "threshold":
        raise ValueError("learning_activations requires the threshold gate form")
    h = state.h
    return np.where(h >= act.h_star, 1.0, np.where(h > 0.0, -act.delta, 0.0))
