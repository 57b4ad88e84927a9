"""Global and pixel-wise 3x3 color transforms, plus a least-squares fitter.

The pixel-wise transform maps each restored linear RGB vector through its
own 3x3 matrix; a single global matrix is the degenerate constant-field
case. fit_global solves the normal equations and serves as the test
oracle for the global-correction baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LinearImage

# Relative threshold on the 3x3 Gram matrix below which the fit is
# considered rank-deficient.
SINGULAR_THRESHOLD = 1e-12


@dataclass(frozen=True)
class GlobalTransform:
    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("global transform must be 3x3")
        if not np.isfinite(m).all():
            raise ValueError("global transform entries must be finite")
        m = np.ascontiguousarray(m)
        m.flags.writeable = False
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class PixelTransformField:
    """H x W grid of per-pixel 3x3 matrices."""

    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=np.float64)
        if m.ndim != 4 or m.shape[2:] != (3, 3):
            raise ValueError(f"expected HxWx3x3 matrices, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("field entries must be finite")
        m = np.ascontiguousarray(m)
        m.flags.writeable = False
        object.__setattr__(self, "matrices", m)

    @property
    def height(self) -> int:
        return self.matrices.shape[0]

    @property
    def width(self) -> int:
        return self.matrices.shape[1]

    def to_array(self) -> np.ndarray:
        """H x W x 9 interchange layout (row-major matrices)."""
        return self.matrices.reshape(self.height, self.width, 9)

    @classmethod
    def from_array(cls, a: np.ndarray) -> "PixelTransformField":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 9:
            raise ValueError(f"expected HxWx9 array, got shape {a.shape}")
        return cls(a.reshape(a.shape[0], a.shape[1], 3, 3))


def apply_global(img: LinearImage, t: GlobalTransform) -> LinearImage:
    out = img.data @ t.m.T
    return LinearImage(np.clip(out, 0.0, 1.0))


def apply_pixelwise(img: LinearImage, f: PixelTransformField) -> LinearImage:
    if (f.height, f.width) != (img.height, img.width):
        raise ValueError(
            f"field size {f.height}x{f.width} does not match "
            f"image {img.height}x{img.width}"
        )
    out = np.einsum("ijab,ijb->ija", f.matrices, img.data)
    return LinearImage(np.clip(out, 0.0, 1.0))


def fit_global(src: LinearImage, dst: LinearImage) -> GlobalTransform:
    """Least-squares M minimizing sum ||M s - d||^2 over all pixels.

    Solved via the normal equations; the 3x3 Gram matrix is solved with
    LAPACK's partially-pivoted elimination. Raises on rank-deficient
    source data (e.g. a constant image).
    """
    if src.data.shape != dst.data.shape:
        raise ValueError("source and destination sizes differ")
    s = src.data.reshape(-1, 3)
    d = dst.data.reshape(-1, 3)
    gram = s.T @ s
    sv = np.linalg.svd(gram, compute_uv=False)
    if sv[-1] <= SINGULAR_THRESHOLD * sv[0] or sv[0] == 0.0:
        raise ValueError("source pixel covariance is rank deficient")
    # M gram = d^T s  =>  gram^T M^T = s^T d
    m = np.linalg.solve(gram, s.T @ d).T
    return GlobalTransform(m)
