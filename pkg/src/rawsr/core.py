"""Image containers and Bayer CFA pattern handling shared by the whole toolkit.

All pixel data is stored as numpy arrays. Linear data is kept as real values
in [0, 1]; 8/16-bit integer encodings are an I/O concern (see io_utils).
Containers are immutable after construction (the backing array is marked
read-only), so they are safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Numerical slack tolerated on the nominal [0, 1] range at construction time,
# e.g. tiny overshoot after a convolution. Anything worse is an error.
RANGE_EPS = 1e-6


class BayerPattern(Enum):
    """The four phases of the 2x2 Bayer block (one R, two G, one B)."""

    RGGB = "RGGB"
    BGGR = "BGGR"
    GRBG = "GRBG"
    GBRG = "GBRG"

    @property
    def layout(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Channel index (0=R, 1=G, 2=B) at each (row parity, col parity)."""
        idx = {"R": 0, "G": 1, "B": 2}
        s = self.value
        return ((idx[s[0]], idx[s[1]]), (idx[s[2]], idx[s[3]]))

    def color_at(self, row: int, col: int) -> int:
        return self.layout[row % 2][col % 2]

    def offsets_of(self, channel: int) -> list[tuple[int, int]]:
        """(row, col) offsets within the 2x2 block holding `channel`."""
        lay = self.layout
        return [(r, c) for r in (0, 1) for c in (0, 1) if lay[r][c] == channel]

    def hflip(self) -> "BayerPattern":
        """Pattern seen after mirroring the mosaic left-right."""
        s = self.value
        return BayerPattern(s[1] + s[0] + s[3] + s[2])


def pattern_color_at(pattern: BayerPattern, row: int, col: int) -> int:
    """Channel (0=R, 1=G, 2=B) measured at mosaic position (row, col)."""
    return pattern.color_at(row, col)


def _validate_unit_range(data: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(data).all():
        raise ValueError(f"{what} contains non-finite samples")
    lo, hi = float(data.min()), float(data.max())
    if lo < -RANGE_EPS or hi > 1.0 + RANGE_EPS:
        raise ValueError(f"{what} samples outside [0, 1]: min={lo}, max={hi}")
    return np.clip(data, 0.0, 1.0)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LinearImage:
    """H x W x 3 linear scene-radiance samples in [0, 1], row-major."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != 3:
            raise ValueError(f"expected HxWx3 data, got shape {d.shape}")
        if d.shape[0] < 2 or d.shape[1] < 2:
            raise ValueError("image must be at least 2x2")
        d = _validate_unit_range(d, "LinearImage")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def new_linear_image(h: int, w: int, samples) -> LinearImage:
    """Build a LinearImage from a flat row-major, channel-interleaved buffer."""
    a = np.asarray(samples, dtype=np.float64).ravel()
    if a.size != h * w * 3:
        raise ValueError(f"expected {h * w * 3} samples, got {a.size}")
    return LinearImage(a.reshape(h, w, 3))


@dataclass(frozen=True)
class BayerRaw:
    """H x W single-plane Bayer mosaic in [0, 1] with even dimensions."""

    data: np.ndarray
    pattern: BayerPattern

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError(f"expected HxW data, got shape {d.shape}")
        if d.shape[0] % 2 or d.shape[1] % 2:
            raise ValueError(f"Bayer dimensions must be even, got {d.shape}")
        d = _validate_unit_range(d, "BayerRaw")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ColorImage8:
    """H x W x 3 display-referred 8-bit image."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 3 or d.shape[2] != 3:
            raise ValueError(f"expected HxWx3 data, got shape {d.shape}")
        if d.dtype != np.uint8:
            if d.min() < 0 or d.max() > 255:
                raise ValueError("8-bit samples must lie in [0, 255]")
            d = d.astype(np.uint8)
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def crop(img, top: int, left: int, h: int, w: int):
    """Crop a window out of any image container, returning the same kind.

    For BayerRaw the offsets must be even so the CFA phase is preserved.
    """
    if top < 0 or left < 0 or h <= 0 or w <= 0:
        raise ValueError("invalid crop window")
    if top + h > img.height or left + w > img.width:
        raise ValueError(
            f"crop window ({top},{left})+({h},{w}) exceeds "
            f"{img.height}x{img.width} image"
        )
    if isinstance(img, BayerRaw):
        if top % 2 or left % 2:
            raise ValueError("BayerRaw crop offsets must be even")
        return BayerRaw(img.data[top : top + h, left : left + w], img.pattern)
    window = img.data[top : top + h, left : left + w]
    if isinstance(img, LinearImage):
        return LinearImage(window)
    if isinstance(img, ColorImage8):
        return ColorImage8(window)
    raise TypeError(f"cannot crop {type(img).__name__}")
