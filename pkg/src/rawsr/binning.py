"""Virtual-sensel binning of a Bayer mosaic into a full-RGB linear image.

Each 2x2 Bayer block becomes one virtual sensel: R and B are taken from
their single sites, G is the mean of the two G sites. Because R and B sit
a quarter binned-pixel away from the block centre, their planes are then
resampled to re-align each channel's sampling centroid with the pixel
centre (color-shift compensation).
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .core import BayerPattern, BayerRaw, LinearImage


def _bin_naive(raw: BayerRaw) -> np.ndarray:
    d = raw.data
    h2, w2 = d.shape[0] // 2, d.shape[1] // 2
    # (h2, w2, 2, 2) view of the Bayer blocks
    blocks = d.reshape(h2, 2, w2, 2).transpose(0, 2, 1, 3)
    out = np.zeros((h2, w2, 3))
    (r_dr, r_dc) = raw.pattern.offsets_of(0)[0]
    (b_dr, b_dc) = raw.pattern.offsets_of(2)[0]
    g_offs = raw.pattern.offsets_of(1)
    out[..., 0] = blocks[..., r_dr, r_dc]
    out[..., 1] = 0.5 * (
        blocks[..., g_offs[0][0], g_offs[0][1]]
        + blocks[..., g_offs[1][0], g_offs[1][1]]
    )
    out[..., 2] = blocks[..., b_dr, b_dc]
    return out


def _plane_shift(pattern: BayerPattern, channel: int) -> tuple[float, float]:
    """ndimage.shift amount that moves the channel's sites onto pixel centres.

    A site at block offset d contributes samples at physical position
    index + (d - 0.5) / 2 on the binned grid, so shifting the plane by
    (d - 0.5) / 2 (output(i) = input(i - s)) re-centres it.
    """
    (dr, dc) = pattern.offsets_of(channel)[0]
    return ((dr - 0.5) / 2.0, (dc - 0.5) / 2.0)


def compensate_color_shift(img: LinearImage, pattern: BayerPattern) -> LinearImage:
    """Bilinearly resample R and B planes by their quarter-pixel offsets.

    G already has its two samples centred on the block, so it is untouched.
    Borders use replicate padding; the operation is linear in the image.
    """
    out = np.array(img.data)
    for ch in (0, 2):
        out[..., ch] = ndimage.shift(
            img.data[..., ch],
            _plane_shift(pattern, ch),
            order=1,
            mode="nearest",
            prefilter=False,
        )
    return LinearImage(np.clip(out, 0.0, 1.0))


def bin_bayer_to_linear(raw: BayerRaw) -> LinearImage:
    """Bin each 2x2 Bayer block into one RGB pixel, then re-centre R and B."""
    naive = LinearImage(_bin_naive(raw))
    return compensate_color_shift(naive, raw.pattern)
