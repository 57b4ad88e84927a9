"""PSNR and single-scale SSIM on arbitrary image arrays."""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import convolve2d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _as_array(img) -> np.ndarray:
    data = getattr(img, "data", img)
    return np.asarray(data, dtype=np.float64)


def psnr(a, b, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE) over all samples; identical inputs give +inf."""
    if peak <= 0:
        raise ValueError("peak must be positive")
    x, y = _as_array(a), _as_array(b)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    c = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(c * c) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_plane(x: np.ndarray, y: np.ndarray, peak: float) -> float:
    w = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    def filt(z):
        return convolve2d(z, w, mode="valid")

    mu_x, mu_y = filt(x), filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov = filt(x * y) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def ssim(a, b, peak: float = 1.0) -> float:
    """Standard single-scale SSIM, 11x11 Gaussian window, sigma 1.5.

    Computed per channel over valid window positions, then averaged.
    """
    x, y = _as_array(a), _as_array(b)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if min(x.shape[0], x.shape[1]) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW} pixels per side")
    if x.ndim == 2:
        x, y = x[..., None], y[..., None]
    return float(
        np.mean([_ssim_plane(x[..., c], y[..., c], peak) for c in range(x.shape[2])])
    )
