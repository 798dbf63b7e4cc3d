"""Deterministic shuffling built on a splitmix64 counter mix.

Dataset splits and minibatch orders must replay exactly for a given seed, so
they are driven by an explicitly documented generator rather than whatever a
host library happens to ship.  The construction is the splitmix64 finalizer
applied to ``seed + (i + 1) * GOLDEN`` for counter ``i``: stateless, splittable
by seed, and vectorizable.  Determinism is promised within this package, not
bit-for-bit against any other implementation.

Floating-point draws (weight initialization) are not covered here; those use
``numpy.random.default_rng`` and are documented where they occur.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def mix64(keys: np.ndarray | int) -> np.ndarray:
    """splitmix64 finalizer applied elementwise to uint64 ``keys``."""
    z = np.asarray(keys, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= _MIX1
        z ^= z >> np.uint64(27)
        z *= _MIX2
        z ^= z >> np.uint64(31)
    return z


def stream(seed: int, n: int) -> np.ndarray:
    """First ``n`` values of the counter stream for ``seed``."""
    if n < 0:
        raise ValueError(f"stream length must be >= 0, got {n}")
    counters = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        keys = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + counters * GOLDEN
    return mix64(keys)


def permutation(n: int, seed: int) -> np.ndarray:
    """Deterministic permutation of ``range(n)`` for ``seed``.

    Sorts the counter stream; the stable sort keeps the result well defined
    even in the astronomically unlikely event of a key collision.
    """
    return np.argsort(stream(seed, n), kind="stable")
