"""Bayer demosaicing: bilinear baseline and adaptive homogeneity-directed.

The AHD path interpolates green along both image axes with 5-tap
directional filters, reconstructs R/B for each candidate through
color-difference interpolation, scores both candidates with per-pixel
homogeneity maps in CIELAB, picks the locally more homogeneous direction,
and finishes with median filtering of the R-G / B-G differences.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .core import BayerPattern, BayerRaw, LinearImage

# Linear RGB (sRGB primaries) -> XYZ, D65 white point.
RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
D65_WHITE = RGB_TO_XYZ.sum(axis=1)

# AHD constants: homogeneity window, median iterations, bilinear border rim.
HOMOGENEITY_WINDOW = 3
MEDIAN_ITERATIONS = 2
BORDER_RIM = 2

# Same-channel interpolation weights (diagonal + axial neighbors).
_INTERP_K = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]])
_CROSS_K = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])


def _channel_masks(raw: BayerRaw) -> list[np.ndarray]:
    h, w = raw.data.shape
    masks = [np.zeros((h, w)) for _ in range(3)]
    lay = raw.pattern.layout
    for r in (0, 1):
        for c in (0, 1):
            masks[lay[r][c]][r::2, c::2] = 1.0
    return masks


def _norm_conv(values: np.ndarray, mask: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    num = ndimage.convolve(values * mask, kernel, mode="nearest")
    den = ndimage.convolve(mask, kernel, mode="nearest")
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def demosaic_bilinear(raw: BayerRaw) -> LinearImage:
    """Average the nearest same-channel neighbors; measured sites kept."""
    d = raw.data
    mr, mg, mb = _channel_masks(raw)
    g = np.where(mg > 0, d, _norm_conv(d, mg, _CROSS_K))
    r = np.where(mr > 0, d, _norm_conv(d, mr, _INTERP_K))
    b = np.where(mb > 0, d, _norm_conv(d, mb, _INTERP_K))
    return LinearImage(np.clip(np.stack([r, g, b], axis=-1), 0.0, 1.0))


def _directional_green(raw: BayerRaw, axis: int) -> np.ndarray:
    """5-tap green interpolation along rows (axis=1) or columns (axis=0)."""
    d = raw.data
    _, mg, _ = _channel_masks(raw)

    def sh(k):
        return np.roll(d, -k, axis=axis)

    est = 0.5 * (sh(-1) + sh(1)) + 0.25 * (2.0 * d - sh(-2) - sh(2))
    return np.where(mg > 0, d, est)


def _fill_rb(raw: BayerRaw, g: np.ndarray) -> np.ndarray:
    """R/B planes via interpolation of the color differences against g."""
    d = raw.data
    mr, _, mb = _channel_masks(raw)
    out = np.empty(d.shape + (3,))
    out[..., 1] = g
    for ch, mask in ((0, mr), (2, mb)):
        diff = _norm_conv(d - g, mask, _INTERP_K)
        out[..., ch] = np.where(mask > 0, d, g + diff)
    return out


def _to_lab(rgb: np.ndarray) -> np.ndarray:
    xyz = rgb @ RGB_TO_XYZ.T
    t = np.clip(xyz / D65_WHITE, 1e-12, None)
    f = np.where(t > (6 / 29) ** 3, np.cbrt(t), t / (3 * (6 / 29) ** 2) + 4 / 29)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def _neighbor_diffs(lab: np.ndarray):
    """|dL| and da^2+db^2 against the four axial neighbors (edge-replicated)."""
    ldiffs, cdiffs = [], []
    for axis, k in ((1, 1), (1, -1), (0, 1), (0, -1)):
        shifted = np.roll(lab, -k, axis=axis)
        # replicate the rolled-in edge so border scores are not wrapped
        if axis == 1 and k == 1:
            shifted[:, -1] = lab[:, -1]
        elif axis == 1 and k == -1:
            shifted[:, 0] = lab[:, 0]
        elif axis == 0 and k == 1:
            shifted[-1, :] = lab[-1, :]
        else:
            shifted[0, :] = lab[0, :]
        ldiffs.append(np.abs(lab[..., 0] - shifted[..., 0]))
        cdiffs.append(
            (lab[..., 1] - shifted[..., 1]) ** 2 + (lab[..., 2] - shifted[..., 2]) ** 2
        )
    return ldiffs, cdiffs


def _homogeneity_maps(cand_h: np.ndarray, cand_v: np.ndarray):
    lab_h, lab_v = _to_lab(cand_h), _to_lab(cand_v)
    lh, ch = _neighbor_diffs(lab_h)
    lv, cv = _neighbor_diffs(lab_v)
    # adaptive ball radii: tightest of horizontal / vertical neighborhoods
    leps = np.minimum(np.maximum(lh[0], lh[1]), np.maximum(lv[2], lv[3]))
    ceps = np.minimum(np.maximum(ch[0], ch[1]), np.maximum(cv[2], cv[3]))
    homo = []
    for ld, cd in ((lh, ch), (lv, cv)):
        score = sum(
            ((ld[i] <= leps) & (cd[i] <= ceps)).astype(np.float64) for i in range(4)
        )
        homo.append(
            ndimage.uniform_filter(score, size=HOMOGENEITY_WINDOW, mode="nearest")
        )
    return homo[0], homo[1]


def demosaic_ahd(raw: BayerRaw, return_direction: bool = False):
    """Adaptive homogeneity-directed demosaicing.

    With return_direction=True also returns the per-pixel selection map
    (0 = horizontal, 1 = vertical, 0.5 = tie/average), used by tests.
    """
    cand_h = _fill_rb(raw, _directional_green(raw, axis=1))
    cand_v = _fill_rb(raw, _directional_green(raw, axis=0))
    hm_h, hm_v = _homogeneity_maps(np.clip(cand_h, 0, 1), np.clip(cand_v, 0, 1))

    pick_h = hm_h > hm_v
    pick_v = hm_v > hm_h
    direction = np.full(raw.data.shape, 0.5)
    direction[pick_h] = 0.0
    direction[pick_v] = 1.0
    out = 0.5 * (cand_h + cand_v)
    out[pick_h] = cand_h[pick_h]
    out[pick_v] = cand_v[pick_v]

    # median filtering of the color differences against green
    for _ in range(MEDIAN_ITERATIONS):
        for ch in (0, 2):
            diff = ndimage.median_filter(
                out[..., ch] - out[..., 1], size=3, mode="nearest"
            )
            out[..., ch] = out[..., 1] + diff

    out = np.clip(out, 0.0, 1.0)

    # AHD's window is undefined on the rim; fall back to bilinear there
    rim = BORDER_RIM
    bil = demosaic_bilinear(raw).data
    out[:rim, :], out[-rim:, :] = bil[:rim, :], bil[-rim:, :]
    out[:, :rim], out[:, -rim:] = bil[:, :rim], bil[:, -rim:]

    # measured sensel values are authoritative at their native sites
    for ch, mask in zip((0, 1, 2), _channel_masks(raw)):
        plane = out[..., ch]
        plane[mask > 0] = raw.data[mask > 0]

    img = LinearImage(out)
    if return_direction:
        return img, direction
    return img
