import numpy as np
import pytest
from scipy import ndimage

from rawsr.core import LinearImage


def smooth_image(seed: int, h: int, w: int, lo: float = 0.1, hi: float = 0.9) -> np.ndarray:
    """Low-pass filtered random image, a stand-in for natural content."""
    rng = np.random.default_rng(seed)
    a = ndimage.gaussian_filter(rng.random((h, w, 3)), (4, 4, 0))
    a = (a - a.min()) / (a.max() - a.min())
    return lo + (hi - lo) * a


@pytest.fixture
def natural_linear() -> LinearImage:
    return LinearImage(smooth_image(7, 64, 64))
