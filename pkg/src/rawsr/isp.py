"""Simplified deterministic camera ISP: white balance, color matrix, tone
curve, 8-bit quantization and JPEG encoding.

A fixed, documented IspProfile substitutes for Dcraw's per-camera defaults
so rendered references and ground truths are reproducible byte-for-byte.
Ground truth and reference must be rendered with the same profile so the
reference colors correspond to the ground truth.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image
from pydantic import BaseModel, Field, field_validator, model_validator

from .core import BayerRaw, ColorImage8, LinearImage
from .demosaic import demosaic_ahd

# Fixed camera-RGB -> sRGB matrix used by the default profile. Rows sum to 1
# exactly so neutral (gray) inputs stay neutral.
DEFAULT_COLOR_MATRIX = [
    [1.6595, -0.5392, -0.1203],
    [-0.2277, 1.5730, -0.3453],
    [0.0251, -0.6457, 1.6206],
]

# Camera JPEG defaults: baseline, quality 95, 4:2:0 chroma subsampling.
JPEG_SUBSAMPLING = 2  # Pillow code for 4:2:0


class IspProfile(BaseModel):
    """Rendering settings shared by reference and ground-truth outputs."""

    wb_gains: tuple[float, float, float] = (2.0, 1.0, 1.5)
    color_matrix: list[list[float]] = Field(
        default_factory=lambda: [row[:] for row in DEFAULT_COLOR_MATRIX]
    )
    tone_curve: str = "srgb"  # one of: srgb, identity, gamma:<value>
    jpeg_quality: int = 95

    model_config = {"extra": "forbid"}

    @field_validator("wb_gains")
    @classmethod
    def _check_gains(cls, v):
        if any(g <= 0 for g in v):
            raise ValueError("white balance gains must be positive")
        if abs(v[1] - 1.0) > 1e-12:
            raise ValueError("white balance gains must be G-normalized (G == 1)")
        return v

    @field_validator("color_matrix")
    @classmethod
    def _check_matrix(cls, v):
        m = np.asarray(v, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("color_matrix must be 3x3")
        if np.abs(m.sum(axis=1) - 1.0).max() > 1e-6:
            raise ValueError("color_matrix rows must sum to 1 (white preservation)")
        return v

    @field_validator("jpeg_quality")
    @classmethod
    def _check_quality(cls, v):
        if not 1 <= v <= 100:
            raise ValueError("jpeg_quality must be in [1, 100]")
        return v

    @model_validator(mode="after")
    def _check_curve(self):
        _parse_tone_curve(self.tone_curve)
        return self


def _parse_tone_curve(name: str):
    if name in ("srgb", "identity"):
        return name, None
    if name.startswith("gamma:"):
        g = float(name.split(":", 1)[1])
        if g <= 0:
            raise ValueError("gamma must be positive")
        return "gamma", g
    raise ValueError(f"unknown tone curve {name!r}")


def white_balance(img: LinearImage, gains) -> LinearImage:
    """Per-channel gain, clipped to [0, 1]."""
    g = np.asarray(gains, dtype=np.float64)
    if g.shape != (3,) or (g <= 0).any():
        raise ValueError("gains must be 3 positive reals")
    return LinearImage(np.clip(img.data * g, 0.0, 1.0))


def apply_color_matrix(img: LinearImage, m) -> LinearImage:
    """Per-pixel 3x3 matrix product, clipped to [0, 1]."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError("color matrix must be 3x3")
    if np.abs(m.sum(axis=1) - 1.0).max() > 1e-6:
        raise ValueError("color matrix rows must sum to 1")
    out = img.data @ m.T
    return LinearImage(np.clip(out, 0.0, 1.0))


def srgb_encode(x: np.ndarray) -> np.ndarray:
    """The standard sRGB transfer curve on [0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(
        x <= 0.0031308, 12.92 * x, 1.055 * np.power(np.maximum(x, 1e-12), 1 / 2.4) - 0.055
    )


def srgb_decode(y: np.ndarray) -> np.ndarray:
    """Inverse of srgb_encode."""
    y = np.asarray(y, dtype=np.float64)
    return np.where(y <= 0.04045, y / 12.92, np.power((y + 0.055) / 1.055, 2.4))


def tone_map(img: LinearImage, curve: str = "srgb") -> LinearImage:
    """Monotone transfer from linear to display-referred values in [0, 1]."""
    kind, gamma = _parse_tone_curve(curve)
    if kind == "identity":
        return img
    if kind == "gamma":
        return LinearImage(np.power(img.data, 1.0 / gamma))
    return LinearImage(np.clip(srgb_encode(img.data), 0.0, 1.0))


def quantize8(img: LinearImage) -> ColorImage8:
    """Round x*255 to integers, ties to even."""
    return ColorImage8(np.rint(img.data * 255.0).astype(np.uint8))


def encode_jpeg(img: ColorImage8, quality: int) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.data).save(
        buf, format="JPEG", quality=quality, subsampling=JPEG_SUBSAMPLING
    )
    return buf.getvalue()


def decode_jpeg(data: bytes) -> ColorImage8:
    with Image.open(io.BytesIO(data)) as im:
        return ColorImage8(np.asarray(im.convert("RGB")))


def render_color(img: LinearImage, profile: IspProfile) -> ColorImage8:
    """The shared color steps: white balance, color matrix, tone, quantize."""
    out = white_balance(img, profile.wb_gains)
    out = apply_color_matrix(out, profile.color_matrix)
    out = tone_map(out, profile.tone_curve)
    return quantize8(out)


def render_ground_truth(x_lin: LinearImage, profile: IspProfile) -> ColorImage8:
    """Render the lossless ground-truth color image (no demosaic, no JPEG)."""
    return render_color(x_lin, profile)


def render_reference(raw: BayerRaw, profile: IspProfile) -> tuple[ColorImage8, bytes]:
    """Demosaic (AHD), render colors and JPEG-compress the reference image.

    Returns the decoded pixels alongside the encoded bytes; the bytes are
    what a dataset stores, the pixels are what a consumer sees.
    """
    rendered = render_color(demosaic_ahd(raw), profile)
    jpeg = encode_jpeg(rendered, profile.jpeg_quality)
    return decode_jpeg(jpeg), jpeg
