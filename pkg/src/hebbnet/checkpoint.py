"""Binary checkpoint format with a JSON sidecar.

Layout (little-endian): magic b"KHW1", version u16, presence flags u8
(bit 0 = hidden weights, bit 1 = head), precision u8 (32 or 64), then
K, D, N_c as u32, then the row-major matrices in declaration order.  The
sidecar at ``<path>.json`` carries a config snapshot, the epoch count and a
tail of the training history; it holds nothing needed to reload the
matrices.  Saving and loading round-trip byte-exactly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DataIOError

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "MAGIC", "VERSION"]

MAGIC = b"KHW1"
VERSION = 1
_HEADER = struct.Struct("<4sHBBIII")
_FLAG_W = 1
_FLAG_S = 2
_DTYPES = {32: np.dtype("<f4"), 64: np.dtype("<f8")}


@dataclass
class Checkpoint:
    """Trained matrices plus free-form metadata for the sidecar."""

    W: np.ndarray | None = None
    S: np.ndarray | None = None
    n_classes: int = 10
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.W is None and self.S is None:
            raise ValueError("checkpoint must hold at least one matrix")
        if self.W is not None and self.S is not None and self.S.shape[1] != self.W.shape[0]:
            raise DataFormatError(
                f"head {self.S.shape} does not match {self.W.shape[0]} hidden units"
            )

    @property
    def n_hidden(self) -> int:
        return self.W.shape[0] if self.W is not None else self.S.shape[1]

    @property
    def n_inputs(self) -> int:
        return self.W.shape[1] if self.W is not None else 0


def save_checkpoint(ckpt: Checkpoint, path: str | Path, precision: int = 64) -> Path:
    """Write the binary file and its ``.json`` sidecar; returns the binary path."""
    if precision not in _DTYPES:
        raise ValueError(f"precision must be 32 or 64, got {precision}")
    path = Path(path)
    dtype = _DTYPES[precision]
    flags = (_FLAG_W if ckpt.W is not None else 0) | (_FLAG_S if ckpt.S is not None else 0)
    n_hidden = ckpt.n_hidden
    n_inputs = ckpt.n_inputs
    blob = bytearray(
        _HEADER.pack(MAGIC, VERSION, flags, precision, n_hidden, n_inputs, ckpt.n_classes)
    )
    if ckpt.W is not None:
        blob += np.ascontiguousarray(ckpt.W, dtype=dtype).tobytes()
    if ckpt.S is not None:
        blob += np.ascontiguousarray(ckpt.S, dtype=dtype).tobytes()
    path.write_bytes(bytes(blob))
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(ckpt.meta, indent=2, sort_keys=True) + "\n")
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read a checkpoint; header dimensions must match the payload exactly."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DataIOError(f"{path}: {exc.strerror or exc}") from exc
    if len(blob) < _HEADER.size:
        raise DataIOError(f"{path}: truncated header ({len(blob)}/{_HEADER.size} bytes)")
    magic, version, flags, precision, n_hidden, n_inputs, n_classes = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}, expected {VERSION}")
    if precision not in _DTYPES:
        raise DataFormatError(f"{path}: unknown precision tag {precision}")
    dtype = _DTYPES[precision]
    expected = 0
    if flags & _FLAG_W:
        expected += n_hidden * n_inputs
    if flags & _FLAG_S:
        expected += n_classes * n_hidden
    payload = blob[_HEADER.size :]
    if len(payload) != expected * dtype.itemsize:
        raise DataFormatError(
            f"{path}: payload is {len(payload)} bytes but header promises "
            f"{expected * dtype.itemsize}"
        )
    offset = 0
    W = S = None
    if flags & _FLAG_W:
        count = n_hidden * n_inputs
        W = np.frombuffer(payload, dtype=dtype, count=count, offset=offset).reshape(
            n_hidden, n_inputs
        ).copy()
        offset += count * dtype.itemsize
    if flags & _FLAG_S:
        count = n_classes * n_hidden
        S = np.frombuffer(payload, dtype=dtype, count=count, offset=offset).reshape(
            n_classes, n_hidden
        ).copy()
    sidecar = path.with_name(path.name + ".json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    return Checkpoint(W=W, S=S, n_classes=n_classes, meta=meta)
