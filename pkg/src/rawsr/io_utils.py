"""File I/O: 16-bit PNG for linear data, 8-bit PNG, JPEG bytes, checksums."""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import cv2
import numpy as np

from .core import BayerPattern, BayerRaw, ColorImage8, LinearImage

DIGEST_ALGORITHM = "sha256"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _imwrite(path, array: np.ndarray):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ok = cv2.imwrite(str(path), array)
    if not ok:
        raise IOError(f"failed to write {path}")


def save_linear_png16(path, img: LinearImage):
    """Quantize to 16 bits and store as 48-bit PNG (BGR on disk)."""
    q = np.rint(img.data * 65535.0).astype(np.uint16)
    _imwrite(path, cv2.cvtColor(q, cv2.COLOR_RGB2BGR))


def load_linear_png16(path) -> LinearImage:
    a = _read_unchanged(path)
    if a.ndim != 3 or a.dtype != np.uint16:
        raise ValueError(f"{path}: expected 16-bit 3-channel PNG")
    rgb = cv2.cvtColor(a, cv2.COLOR_BGR2RGB)
    return LinearImage(rgb.astype(np.float64) / 65535.0)


def save_raw_png16(path, raw: BayerRaw):
    q = np.rint(raw.data * 65535.0).astype(np.uint16)
    _imwrite(path, q)


def load_raw_png16(path, pattern: BayerPattern) -> BayerRaw:
    a = _read_unchanged(path)
    if a.ndim != 2 or a.dtype != np.uint16:
        raise ValueError(f"{path}: expected 16-bit single-plane PNG")
    return BayerRaw(a.astype(np.float64) / 65535.0, pattern)


def save_color_png8(path, img: ColorImage8):
    _imwrite(path, cv2.cvtColor(img.data, cv2.COLOR_RGB2BGR))


def load_color_png8(path) -> ColorImage8:
    a = _read_unchanged(path)
    if a.ndim != 3 or a.dtype != np.uint8:
        raise ValueError(f"{path}: expected 8-bit 3-channel image")
    return ColorImage8(cv2.cvtColor(a, cv2.COLOR_BGR2RGB))


def save_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _read_unchanged(path) -> np.ndarray:
    a = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if a is None:
        raise IOError(f"cannot read image {path}")
    return a


def read_image_any(path) -> np.ndarray:
    """Raw pixel array (uint8/uint16, single- or 3-channel RGB) from disk."""
    a = _read_unchanged(path)
    if a.ndim == 3:
        a = cv2.cvtColor(a, cv2.COLOR_BGR2RGB)
    return a


def save_field_npy(path, field_array: np.ndarray):
    """Persist an H x W x 9 pixel-transform interchange array."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, np.asarray(field_array, dtype=np.float64))


def load_field_npy(path) -> np.ndarray:
    a = np.load(path)
    if a.ndim != 3 or a.shape[2] != 9:
        raise ValueError(f"{path}: expected HxWx9 array, got {a.shape}")
    return a
