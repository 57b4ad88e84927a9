"""Whole-image and tiled inference with overlap averaging."""

from __future__ import annotations

import numpy as np
import torch

from .data import load_plane01


def infer(model, raw: np.ndarray, ref: np.ndarray):
    """raw (H, W) and ref (H, W, 3) in [0,1] -> (x_hat, x_lin, field) arrays.

    x_hat / x_lin are (2H, 2W, 3) clipped to [0,1]; field is (2H, 2W, 9).
    """
    model.eval()
    with torch.no_grad():
        raw_t = torch.tensor(raw[None], dtype=torch.float32)
        ref_t = torch.tensor(ref[None], dtype=torch.float32).permute(0, 3, 1, 2)
        x_hat, x_lin, field = model(raw_t, ref_t)
    to_img = lambda t: t[0].permute(1, 2, 0).numpy().astype(np.float64)
    return (
        np.clip(to_img(x_hat), 0.0, 1.0),
        np.clip(to_img(x_lin), 0.0, 1.0),
        to_img(field),
    )


def _tile_starts(extent: int, tile: int, stride: int) -> list[int]:
    starts = list(range(0, extent - tile + 1, stride))
    if starts[-1] != extent - tile:
        starts.append(extent - tile)
    return starts


def infer_tiled(model, raw: np.ndarray, ref: np.ndarray,
                tile: int = 64, overlap: int = 16) -> np.ndarray:
    """Chop raw+ref into aligned overlapping tiles, infer, merge at 2x.

    Tile corners are even so every tile keeps the Bayer phase. Each tile's
    rim (half the overlap, where padding artifacts live) is trimmed before
    merging, except along the image border; remaining overlaps are
    averaged with per-pixel coverage counts.
    """
    h, w = raw.shape
    if tile % 2 or overlap % 2:
        raise ValueError("tile and overlap must be even to keep Bayer phase")
    if tile > min(h, w):
        raise ValueError("tile larger than the input")
    stride = tile - overlap
    trim = overlap // 2
    acc = np.zeros((2 * h, 2 * w, 3))
    count = np.zeros((2 * h, 2 * w, 1))
    for top in _tile_starts(h, tile, stride):
        for left in _tile_starts(w, tile, stride):
            top -= top % 2
            left -= left % 2
            raw_tile = raw[top : top + tile, left : left + tile]
            ref_tile = ref[top : top + tile, left : left + tile]
            x_hat, _, _ = infer(model, raw_tile, ref_tile)
            # trim interior rims; keep rims that touch the image border
            t0 = 0 if top == 0 else 2 * trim
            l0 = 0 if left == 0 else 2 * trim
            t1 = 2 * tile if top + tile == h else 2 * (tile - trim)
            l1 = 2 * tile if left + tile == w else 2 * (tile - trim)
            acc[2 * top + t0 : 2 * top + t1, 2 * left + l0 : 2 * left + l1] += (
                x_hat[t0:t1, l0:l1]
            )
            count[2 * top + t0 : 2 * top + t1, 2 * left + l0 : 2 * left + l1] += 1
    if (count == 0).any():
        raise ValueError("tiling leaves uncovered pixels")
    return acc / count


def load_raw01(path) -> np.ndarray:
    a = load_plane01(path)
    if a.ndim != 2:
        raise ValueError(f"{path}: expected a single-plane mosaic")
    return a


def load_ref01(path) -> np.ndarray:
    a = load_plane01(path)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"{path}: expected a 3-channel reference")
    return a
