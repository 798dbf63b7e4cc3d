"""Weight-grid rendering to binary PPM (P6) files.

Each hidden unit's weight row becomes one tile, scaled by its own max-abs
entry: zero weights render white, the largest positive weight pure red, the
largest negative pure blue, with linear fades toward white in between.  Tiles
are separated by a 1-pixel gray gap.

Flat rows are reshaped by input dimension: 784 becomes a 28x28 tile, 3072 a
32x32 three-plane tile, and any perfect square a single square tile.  For
three-plane rows two renderings are produced, since signed RGB weights have
no canonical image: a "planes" grid (the R, G, B planes side by side, each
signed-colormapped as above) and an "rgb" grid (one tile per unit whose
channel brightness is the signed value mapped linearly onto 0..255, so zero
weights render mid-gray).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .rng import permutation

__all__ = ["tile_shape", "weight_grid", "write_ppm", "export_weight_images"]

GAP = 1
GAP_GRAY = 128


def tile_shape(n_features: int) -> tuple[int, int, int]:
    """(height, width, channels) of one tile for a flat row length."""
    if n_features == 784:
        return 28, 28, 1
    if n_features == 3072:
        return 32, 32, 3
    side = int(round(np.sqrt(n_features)))
    if side * side == n_features:
        return side, side, 1
    raise ValueError(f"cannot infer a tile shape for {n_features} weights per unit")


def _signed_colormap(tile: np.ndarray) -> np.ndarray:
    # tile values in [-1, 1]; 0 -> white, +1 -> red, -1 -> blue.
    fade = np.round(255.0 * (1.0 - np.abs(tile))).astype(np.uint8)
    out = np.empty(tile.shape + (3,), dtype=np.uint8)
    pos = tile >= 0.0
    out[..., 0] = np.where(pos, 255, fade)
    out[..., 1] = fade
    out[..., 2] = np.where(pos, fade, 255)
    return out


def _brightness_rgb(tile: np.ndarray) -> np.ndarray:
    # tile values in [-1, 1] per channel; linear map onto 0..255.
    return np.round(255.0 * (tile + 1.0) / 2.0).astype(np.uint8)


def select_units(n_units: int, count: int, select: str, seed: int) -> np.ndarray:
    if count > n_units:
        raise ValueError(f"grid needs {count} units but only {n_units} are available")
    if select == "first":
        return np.arange(count)
    if select == "random":
        return permutation(n_units, seed)[:count]
    raise ValueError(f"unknown unit selection {select!r}")


def weight_grid(
    W: np.ndarray,
    rows: int,
    cols: int,
    select: str = "first",
    seed: int = 0,
    style: str = "signed",
) -> np.ndarray:
    """Render a rows x cols grid of unit tiles as an (H, W, 3) uint8 image.

    ``style="signed"`` uses the red/white/blue colormap (three-plane rows are
    laid side by side); ``style="rgb"`` is only valid for three-plane rows.
    """
    W = np.asarray(W, dtype=np.float64)
    th, tw, channels = tile_shape(W.shape[1])
    if style == "rgb" and channels != 3:
        raise ValueError("rgb style requires three-plane weight rows")
    units = select_units(W.shape[0], rows * cols, select, seed)

    tile_w = tw if style == "rgb" else tw * channels
    height = rows * th + (rows - 1) * GAP
    width = cols * tile_w + (cols - 1) * GAP
    image = np.full((height, width, 3), GAP_GRAY, dtype=np.uint8)

    for slot, unit in enumerate(units):
        row = W[unit]
        peak = np.max(np.abs(row))
        scaled = row / peak if peak > 0.0 else np.zeros_like(row)
        planes = scaled.reshape(channels, th, tw)
        if style == "rgb":
            tile = _brightness_rgb(np.moveaxis(planes, 0, -1))
        else:
            tile = np.concatenate([_signed_colormap(plane) for plane in planes], axis=1)
        r, c = divmod(slot, cols)
        y, x = r * (th + GAP), c * (tile_w + GAP)
        image[y : y + th, x : x + tile_w] = tile
    return image


def write_ppm(image: np.ndarray, path: str | Path) -> Path:
    """Write an (H, W, 3) uint8 image as binary PPM."""
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError(f"expected an (H, W, 3) uint8 image, got {image.shape} {image.dtype}")
    path = Path(path)
    header = f"P6\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + image.tobytes())
    return path


def export_weight_images(
    W: np.ndarray,
    rows: int,
    cols: int,
    out_path: str | Path,
    select: str = "first",
    seed: int = 0,
) -> list[Path]:
    """Write the grid image(s) for a weight matrix; returns the paths.

    Single-plane rows produce one file at ``out_path``.  Three-plane rows
    produce ``<stem>_planes.ppm`` and ``<stem>_rgb.ppm``.
    """
    out_path = Path(out_path)
    _, _, channels = tile_shape(W.shape[1])
    if channels == 1:
        return [write_ppm(weight_grid(W, rows, cols, select, seed), out_path)]
    stem = out_path.with_suffix("")
    return [
        write_ppm(weight_grid(W, rows, cols, select, seed, style="signed"),
                  stem.with_name(stem.name + "_planes.ppm")),
        write_ppm(weight_grid(W, rows, cols, select, seed, style="rgb"),
                  stem.with_name(stem.name + "_rgb.ppm")),
    ]
