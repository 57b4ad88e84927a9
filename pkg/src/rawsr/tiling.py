"""Overlapping patch chop / merge used for tiled inference.

Patches are laid on a regular grid with stride patch_size - overlap; the
last row/column is shifted inward so every pixel is covered. Merging sums
the (possibly upscaled) patch contributions and divides by the per-pixel
coverage count, in a fixed deterministic order.
"""

from __future__ import annotations

import numpy as np


def _starts(extent: int, patch: int, stride: int) -> list[int]:
    s = list(range(0, extent - patch + 1, stride))
    if s[-1] != extent - patch:
        s.append(extent - patch)
    return s


def chop(img, patch_size: int, overlap: int) -> list[tuple[np.ndarray, tuple[int, int]]]:
    """Split into overlapping patches; returns (patch, (top, left)) pairs."""
    data = np.asarray(getattr(img, "data", img))
    h, w = data.shape[0], data.shape[1]
    if patch_size <= 0 or patch_size > min(h, w):
        raise ValueError(f"patch_size must be in [1, {min(h, w)}]")
    if not 0 <= overlap < patch_size:
        raise ValueError("overlap must satisfy 0 <= overlap < patch_size")
    stride = patch_size - overlap
    out = []
    for top in _starts(h, patch_size, stride):
        for left in _starts(w, patch_size, stride):
            out.append((data[top : top + patch_size, left : left + patch_size], (top, left)))
    return out


def merge(
    patches: list[tuple[np.ndarray, tuple[int, int]]],
    out_h: int,
    out_w: int,
    scale: int = 1,
) -> np.ndarray:
    """Reassemble patches (positions scaled by `scale`), averaging overlaps."""
    if not patches:
        raise ValueError("no patches to merge")
    sample = np.asarray(patches[0][0])
    shape = (out_h, out_w) + sample.shape[2:]
    acc = np.zeros(shape, dtype=np.float64)
    count = np.zeros((out_h, out_w), dtype=np.int64)
    for patch, (top, left) in patches:
        p = np.asarray(patch)
        r, c = top * scale, left * scale
        if r < 0 or c < 0 or r + p.shape[0] > out_h or c + p.shape[1] > out_w:
            raise ValueError(f"patch at ({top},{left}) falls outside the output")
        acc[r : r + p.shape[0], c : c + p.shape[1]] += p
        count[r : r + p.shape[0], c : c + p.shape[1]] += 1
    if (count == 0).any():
        raise ValueError("merge leaves uncovered pixels")
    return acc / count[(...,) + (None,) * (acc.ndim - 2)]
