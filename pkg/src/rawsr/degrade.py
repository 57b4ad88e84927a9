"""Raw-domain degradation: blur, 2x downsample, Bayer sampling, sensor noise.

The composition is
    raw = bayer_sample(downsample2(lin * k_def * k_mot)) + n
with n zero-mean Gaussian of per-pixel variance sigma1^2 * x + sigma2^2.
All randomness flows through an explicit numpy Generator backed by the
counter-based Philox algorithm, so outputs are reproducible across
machines for a given seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import BayerPattern, BayerRaw, LinearImage

# Heading increments of the motion random walk (radians).
MOTION_HEADING_SIGMA = np.pi / 6.0
# Samples splatted per unit-length walk segment.
MOTION_SUBSTEPS = 16


def make_rng(seed: int) -> np.random.Generator:
    """Seedable, platform-independent generator (Philox counter-based)."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def derive_seed(master_seed: int, index: int, label: str = "") -> int:
    """Independent 64-bit stream seed for (master seed, image index, label)."""
    h = hashlib.sha256()
    h.update(b"rawsr-stream")
    h.update(int(master_seed).to_bytes(8, "little", signed=False))
    h.update(int(index).to_bytes(8, "little", signed=False))
    h.update(label.encode())
    return int.from_bytes(h.digest()[:8], "little")


@dataclass(frozen=True)
class Kernel:
    """Odd-sized square convolution kernel, non-negative, summing to 1."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
            raise ValueError(f"kernel must be odd square, got shape {w.shape}")
        if (w < 0).any():
            raise ValueError("kernel weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError(f"kernel weights must sum to 1, got {w.sum()}")
        w = np.ascontiguousarray(w)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def delta_kernel() -> Kernel:
    return Kernel(np.ones((1, 1)))


def _disk_corner_area(x: np.ndarray, y: np.ndarray, r: float) -> np.ndarray:
    """Area of {u^2 + v^2 <= r^2, u <= x, v <= y}, exact and vectorized."""

    def G(t):
        # antiderivative of sqrt(r^2 - t^2) on [-r, r]
        t = np.clip(t, -r, r)
        return 0.5 * (t * np.sqrt(np.maximum(r * r - t * t, 0.0))
                      + r * r * np.arcsin(t / r))

    x = np.clip(np.asarray(x, dtype=np.float64), -r, r)
    y = np.asarray(y, dtype=np.float64)
    uy = np.sqrt(np.maximum(r * r - np.clip(y, -r, r) ** 2, 0.0))

    # y >= r: full vertical chord everywhere
    full = 2.0 * (G(x) - G(-r))

    # 0 <= y < r: chord clipped above at y inside |u| <= uy
    xl = np.clip(x, -r, -uy)
    xm = np.clip(x, -uy, uy)
    xr = np.clip(x, uy, r)
    upper = (2.0 * (G(xl) - G(-r))
             + y * (xm + uy) + (G(xm) - G(-uy))
             + 2.0 * (G(xr) - G(uy)))

    # -r < y < 0: support only on |u| <= uy, chord height y + sqrt(...)
    lower = y * (xm + uy) + (G(xm) - G(-uy))

    out = np.where(y >= r, full, np.where(y >= 0.0, upper, lower))
    return np.where(y <= -r, 0.0, out)


def disk_kernel(radius: float) -> Kernel:
    """Defocus kernel: each weight is the exact pixel-cell/disk overlap area.

    Support is 2*ceil(radius)+1; weights are normalized to sum to 1.
    """
    if radius <= 0:
        raise ValueError("disk radius must be positive")
    half = int(np.ceil(radius))
    size = 2 * half + 1
    c = np.arange(size, dtype=np.float64) - half
    x0, x1 = c[None, :] - 0.5, c[None, :] + 0.5
    y0, y1 = c[:, None] - 0.5, c[:, None] + 0.5
    area = (_disk_corner_area(x1, y1, radius)
            - _disk_corner_area(x0, y1, radius)
            - _disk_corner_area(x1, y0, radius)
            + _disk_corner_area(x0, y0, radius))
    area = np.maximum(area, 0.0)
    return Kernel(area / area.sum())


def random_walk_motion_kernel(
    max_size: int, steps: int, rng: np.random.Generator
) -> Kernel:
    """Camera-shake kernel from a random walk of unit-length segments.

    The heading starts uniform and evolves with Gaussian increments; the
    trajectory is re-centred on its centroid, clamped to the max_size box
    and rasterized with bilinear splatting. steps == 0 gives a delta.
    """
    if max_size < 1 or max_size % 2 == 0:
        raise ValueError(f"motion kernel size must be odd >= 1, got {max_size}")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps == 0:
        w = np.zeros((max_size, max_size))
        w[max_size // 2, max_size // 2] = 1.0
        return Kernel(w)

    theta0 = rng.uniform(0.0, 2.0 * np.pi)
    headings = theta0 + np.cumsum(
        np.concatenate([[0.0], rng.normal(0.0, MOTION_HEADING_SIGMA, steps - 1)])
    )
    deltas = np.stack([np.sin(headings), np.cos(headings)], axis=1)  # (row, col)
    verts = np.concatenate([np.zeros((1, 2)), np.cumsum(deltas, axis=0)])

    # dense samples along each segment, equal weight
    t = (np.arange(MOTION_SUBSTEPS) + 1.0) / MOTION_SUBSTEPS
    pts = verts[:-1, None, :] + t[None, :, None] * deltas[:, None, :]
    pts = np.concatenate([verts[:1], pts.reshape(-1, 2)])
    pts = pts - pts.mean(axis=0)

    half = (max_size - 1) / 2.0
    idx = np.clip(pts + half, 0.0, max_size - 1 - 1e-9)
    i0 = np.floor(idx).astype(int)
    f = idx - i0
    w = np.zeros((max_size, max_size))
    np.add.at(w, (i0[:, 0], i0[:, 1]), (1 - f[:, 0]) * (1 - f[:, 1]))
    np.add.at(w, (i0[:, 0], i0[:, 1] + 1), (1 - f[:, 0]) * f[:, 1])
    np.add.at(w, (i0[:, 0] + 1, i0[:, 1]), f[:, 0] * (1 - f[:, 1]))
    np.add.at(w, (i0[:, 0] + 1, i0[:, 1] + 1), f[:, 0] * f[:, 1])
    return Kernel(w / w.sum())


@dataclass(frozen=True)
class DegradationParams:
    """One image's degradation draw; fully determines the degraded raw."""

    defocus_radius: float
    motion_max_size: int
    motion_steps: int
    sigma1: float
    sigma2: float
    seed: int

    def __post_init__(self):
        if self.defocus_radius <= 0 or self.defocus_radius > 5.0:
            raise ValueError("defocus_radius must be in (0, 5]")
        if self.motion_max_size < 1 or self.motion_max_size % 2 == 0:
            raise ValueError("motion_max_size must be odd >= 1")
        if self.motion_max_size > 11:
            raise ValueError("motion_max_size must be <= 11")
        if self.motion_steps < 0:
            raise ValueError("motion_steps must be >= 0")
        if not (0.0 <= self.sigma1 <= 1e-2 and 0.0 <= self.sigma2 <= 1e-3):
            raise ValueError("sigma1 in [0, 1e-2], sigma2 in [0, 1e-3]")


def convolve(img: LinearImage, k: Kernel) -> LinearImage:
    """Per-channel 2-D convolution with reflect padding, same-size output."""
    if k.size > min(img.height, img.width):
        raise ValueError("kernel larger than image")
    out = np.empty_like(np.asarray(img.data))
    for c in range(3):
        out[..., c] = ndimage.convolve(img.data[..., c], k.weights, mode="reflect")
    return LinearImage(np.clip(out, 0.0, 1.0))


def downsample2(img: LinearImage) -> LinearImage:
    """2x2 box average, modelling sensor-area integration."""
    if img.height % 2 or img.width % 2:
        raise ValueError("downsample2 requires even dimensions")
    d = img.data
    h2, w2 = img.height // 2, img.width // 2
    out = d.reshape(h2, 2, w2, 2, 3).mean(axis=(1, 3))
    return LinearImage(out)


def bayer_sample(img: LinearImage, pattern: BayerPattern) -> BayerRaw:
    """Mosaic the image: keep only the CFA channel at each site."""
    if img.height % 2 or img.width % 2:
        raise ValueError("bayer_sample requires even dimensions")
    out = np.empty((img.height, img.width))
    lay = pattern.layout
    for r in (0, 1):
        for c in (0, 1):
            out[r::2, c::2] = img.data[r::2, c::2, lay[r][c]]
    return BayerRaw(out, pattern)


def add_hetero_noise(
    raw: BayerRaw, sigma1: float, sigma2: float, rng: np.random.Generator
) -> BayerRaw:
    """Add signal-dependent Gaussian noise, variance sigma1^2*x + sigma2^2."""
    if sigma1 < 0 or sigma2 < 0:
        raise ValueError("noise sigmas must be >= 0")
    if sigma1 == 0 and sigma2 == 0:
        return raw
    std = np.sqrt(sigma1 * sigma1 * raw.data + sigma2 * sigma2)
    noisy = raw.data + std * rng.standard_normal(raw.data.shape)
    return BayerRaw(np.clip(noisy, 0.0, 1.0), raw.pattern)


def degrade(
    x_lin: LinearImage,
    params: DegradationParams,
    rng: np.random.Generator | None = None,
    pattern: BayerPattern = BayerPattern.RGGB,
) -> BayerRaw:
    """Full degradation chain: defocus, motion, downsample, mosaic, noise."""
    if x_lin.height % 4 or x_lin.width % 4:
        raise ValueError("degrade requires dimensions divisible by 4")
    if rng is None:
        rng = make_rng(params.seed)
    k_def = disk_kernel(params.defocus_radius)
    k_mot = random_walk_motion_kernel(params.motion_max_size, params.motion_steps, rng)
    blurred = convolve(convolve(x_lin, k_def), k_mot)
    raw = bayer_sample(downsample2(blurred), pattern)
    return add_hetero_noise(raw, params.sigma1, params.sigma2, rng)
