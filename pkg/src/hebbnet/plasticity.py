"""Synaptic plasticity core: p-metric inner products and the local update rule.

Each hidden unit carries a weight row ``w`` over the inputs.  The rule is
expressed in a weight-dependent inner product

    <x, y>_w = sum_i |w_i|**(p - 2) * x_i * y_i,    p >= 2,

whose diagonal ``<w, w>_w`` equals the p-th power of the Lebesgue p-norm of
``w``.  A single presentation of an input ``v`` moves ``w`` along

    dw_i = g * (R**p * v_i - <w, v>_w * w_i),

which leaves the sphere ``|w|_p = R`` invariant and attracts weights to it
whenever ``g * <w, v>_w >= 0``.  The scalar gate ``g`` encodes the learning
regime: positive for units driven strongly (associative strengthening),
negative for runners-up (active weakening), zero for silent units.

Everything here is a pure function of its arguments; trainers own all
mutation.  Computations are double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PMetricConfig",
    "LearningActivation",
    "metric_image",
    "p_inner",
    "p_norm_p",
    "q_value",
    "plasticity_increment",
    "norm_flow_rate",
    "lyapunov",
]


@dataclass(frozen=True)
class PMetricConfig:
    """Lebesgue norm power ``p`` and target sphere radius ``R``."""

    p: float = 2.0
    R: float = 1.0

    def __post_init__(self) -> None:
        if not self.p >= 2.0:
            raise ValueError(f"norm power p must be >= 2, got {self.p}")
        if not self.R > 0.0:
            raise ValueError(f"sphere radius R must be > 0, got {self.R}")


@dataclass(frozen=True)
class LearningActivation:
    """Shape of the learning gate g.

    ``rank_based``: the unit ranked first on a stimulus gets g = +1 and the
    unit ranked ``k``-th gets g = -delta (all others 0).  ``threshold``: g is
    read off a unit's steady-state activity h, switching sign at ``h_star``:
    +1 for h >= h_star, -delta for 0 < h < h_star, 0 for h <= 0.
    """

    form: str = "rank_based"
    delta: float = 0.4
    h_star: float = 1.0
    k: int = 2

    def __post_init__(self) -> None:
        if self.form not in ("rank_based", "threshold"):
            raise ValueError(f"unknown activation form {self.form!r}")
        if self.delta < 0.0:
            raise ValueError(f"anti-Hebbian strength delta must be >= 0, got {self.delta}")
        if self.k < 2:
            raise ValueError(f"anti-Hebbian rank k must be >= 2, got {self.k}")
        if self.form == "threshold" and not self.h_star > 0.0:
            raise ValueError(f"threshold h_star must be > 0, got {self.h_star}")


def metric_image(w: np.ndarray, p: float) -> np.ndarray:
    """Return ``sign(w) * |w|**(p-1)``, the metric contraction of ``w``.

    Dotting this with any vector x gives ``<w, x>_w``.  Works on a single row
    or a stack of rows.
    """
    if not p >= 2.0:
        raise ValueError(f"norm power p must be >= 2, got {p}")
    w = np.asarray(w, dtype=np.float64)
    return np.sign(w) * np.abs(w) ** (p - 1.0)


def p_inner(w: np.ndarray, x: np.ndarray, p: float) -> float:
    """Inner product ``<w, x>_w`` of a weight row with a vector.

    For p = 2 this is the plain dot product.
    """
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.ndim != 1 or x.ndim != 1 or w.shape != x.shape:
        raise ValueError(f"w and x must be equal-length vectors, got {w.shape} and {x.shape}")
    return float(metric_image(w, p) @ x)


def p_norm_p(w: np.ndarray, p: float) -> float:
    """p-th power of the Lebesgue p-norm, ``sum_i |w_i|**p``.

    Computed directly from the definition; equals ``p_inner(w, w, p)``.
    """
    if not p >= 2.0:
        raise ValueError(f"norm power p must be >= 2, got {p}")
    w = np.asarray(w, dtype=np.float64)
    return float(np.sum(np.abs(w) ** p))


def q_value(w: np.ndarray, v: np.ndarray, p: float) -> float:
    """Normalized projection ``Q = <w, v>_w / <w, w>_w**((p-1)/p)``.

    Q is invariant to rescaling of ``w`` and is the natural argument of the
    learning gate.  Raises on a zero-norm row, where Q is singular.
    """
    norm = p_norm_p(w, p)
    if norm <= 0.0:
        raise ValueError("q_value is singular on a zero-norm weight row")
    return p_inner(w, v, p) / norm ** ((p - 1.0) / p)


def plasticity_increment(
    w: np.ndarray, v: np.ndarray, g: float, cfg: PMetricConfig
) -> np.ndarray:
    """Unscaled weight increment ``g * (R**p * v - <w, v>_w * w)``.

    The caller applies the learning-rate scaling.  ``w = R * v / |v|_p`` with
    v >= 0 is a fixed point: the increment vanishes there identically.
    """
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if w.shape != v.shape:
        raise ValueError(f"w and v must have equal shapes, got {w.shape} and {v.shape}")
    return g * (cfg.R**cfg.p * v - p_inner(w, v, cfg.p) * w)


def norm_flow_rate(w: np.ndarray, v: np.ndarray, g: float, cfg: PMetricConfig) -> float:
    """Instantaneous rate of change of ``<w, w>_w`` under the update rule.

    Equals ``p * g * <w, v>_w * (R**p - <w, w>_w)``: the squared-norm flow is
    zero exactly on the sphere and points toward it while ``g * <w, v>_w`` is
    nonnegative.
    """
    wv = p_inner(w, v, cfg.p)
    ww = p_norm_p(w, cfg.p)
    return cfg.p * g * wv * (cfg.R**cfg.p - ww)


def _gate_antiderivative(q: float, act: LearningActivation) -> float:
    # Piecewise-linear antiderivative of the threshold gate, anchored at G(0)=0.
    if q <= 0.0:
        return 0.0
    if q < act.h_star:
        return -act.delta * q
    return -act.delta * act.h_star + (q - act.h_star)


def lyapunov(
    W: np.ndarray,
    v: np.ndarray,
    cfg: PMetricConfig,
    g_form: str | LearningActivation = "linear",
) -> float:
    """Energy ``L = sum_mu G(Q_mu)`` that never decreases under the update rule.

    ``G`` is the antiderivative of the gate: Q**2 / 2 for the linear gate
    g(Q) = Q, and the continuous piecewise-linear function anchored at
    G(0) = 0 for the threshold gate.  The rank-based gate couples units
    through sorting and has no per-unit antiderivative, so it is rejected.
    """
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    qs = [q_value(row, v, cfg.p) for row in W]
    if isinstance(g_form, LearningActivation):
        if g_form.form != "threshold":
            raise ValueError("lyapunov supports the linear and threshold gate forms only")
        return float(sum(_gate_antiderivative(q, g_form) for q in qs))
    if g_form == "linear":
        return float(sum(q * q / 2.0 for q in qs))
    raise ValueError(f"unknown gate form {g_form!r}")
