import numpy as np
import pytest

from rawsr.core import BayerPattern, BayerRaw, LinearImage
from rawsr.degrade import bayer_sample
from rawsr.demosaic import (
    D65_WHITE,
    RGB_TO_XYZ,
    _CROSS_K,
    _INTERP_K,
    demosaic_ahd,
    demosaic_bilinear,
)
from rawsr.metrics import psnr
from conftest import smooth_image


def gray_sinusoid(h, w, period, angle):
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    t = yy * np.cos(angle) + xx * np.sin(angle)
    g = 0.5 + 0.35 * np.sin(2 * np.pi * t / period)
    return np.stack([g] * 3, axis=-1)


def tinted_sinusoid(h, w, period):
    yy = np.arange(h, dtype=float)[:, None] * np.ones((1, w))
    g = 0.5 + 0.3 * np.sin(2 * np.pi * yy / period)
    return np.stack([0.9 * g, g, 0.8 * g], axis=-1)


class TestColorConstants:
    def test_d65_white(self):
        # white = row sums of the matrix; standard D65 tristimulus values
        np.testing.assert_allclose(D65_WHITE, [0.9505, 1.0, 1.089], atol=5e-4)

    def test_luminance_row(self):
        assert RGB_TO_XYZ[1].sum() == pytest.approx(1.0, abs=5e-7)


def _bilinear_oracle(raw):
    """Nested-loop reference: weighted same-channel neighbor averaging
    with edge replication (indices clipped to the image bounds)."""
    d = raw.data
    h, w = d.shape
    out = np.zeros((h, w, 3))
    for i in range(h):
        for j in range(w):
            for ch in range(3):
                if raw.pattern.color_at(i, j) == ch:
                    out[i, j, ch] = d[i, j]
                    continue
                kern = _CROSS_K if ch == 1 else _INTERP_K
                num = den = 0.0
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        ii = min(max(i + di, 0), h - 1)
                        jj = min(max(j + dj, 0), w - 1)
                        if raw.pattern.color_at(ii, jj) == ch:
                            num += kern[di + 1, dj + 1] * d[ii, jj]
                            den += kern[di + 1, dj + 1]
                out[i, j, ch] = num / den
    return np.clip(out, 0.0, 1.0)


class TestBilinear:
    @pytest.mark.parametrize("pattern", list(BayerPattern))
    def test_against_nested_loop_oracle(self, pattern):
        rng = np.random.default_rng(31)
        raw = BayerRaw(rng.random((8, 10)), pattern)
        out = demosaic_bilinear(raw)
        np.testing.assert_allclose(out.data, _bilinear_oracle(raw), atol=1e-12)

    def test_constant_exact(self):
        img = LinearImage(np.broadcast_to([0.2, 0.5, 0.7], (8, 8, 3)).copy())
        raw = bayer_sample(img, BayerPattern.BGGR)
        out = demosaic_bilinear(raw)
        np.testing.assert_allclose(out.data, img.data, atol=1e-12)

    def test_affine_ramp_exact_interior(self):
        plane = 0.1 + 0.002 * np.arange(16)[:, None] + 0.003 * np.arange(16)[None, :]
        img = LinearImage(np.stack([plane] * 3, axis=-1))
        raw = bayer_sample(img, BayerPattern.RGGB)
        out = demosaic_bilinear(raw)
        np.testing.assert_allclose(out.data[1:-1, 1:-1], img.data[1:-1, 1:-1],
                                   atol=1e-12)


class TestAhd:
    def test_constant_exact(self):
        img = LinearImage(np.broadcast_to([0.3, 0.5, 0.6], (12, 12, 3)).copy())
        raw = bayer_sample(img, BayerPattern.RGGB)
        out = demosaic_ahd(raw)
        np.testing.assert_allclose(out.data, img.data, atol=1e-12)

    def test_affine_ramp_exact_interior(self):
        plane = 0.1 + 0.002 * np.arange(20)[:, None] + 0.003 * np.arange(20)[None, :]
        img = LinearImage(np.stack([plane] * 3, axis=-1))
        raw = bayer_sample(img, BayerPattern.RGGB)
        out = demosaic_ahd(raw)
        np.testing.assert_allclose(out.data[2:-2, 2:-2], img.data[2:-2, 2:-2],
                                   atol=1e-9)

    @pytest.mark.parametrize("pattern", list(BayerPattern))
    def test_measured_sites_kept(self, pattern):
        raw = BayerRaw(smooth_image(41, 32, 32)[..., 0], pattern)
        out = demosaic_ahd(raw)
        for i in range(32):
            for j in range(32):
                ch = pattern.color_at(i, j)
                assert out.data[i, j, ch] == raw.data[i, j]

    def test_direction_map_on_vertical_variation(self):
        # signal constant along each row -> interpolation along rows is
        # exact -> horizontal direction (0) must dominate the interior
        img = LinearImage(gray_sinusoid(128, 128, 24, 0.0))
        raw = bayer_sample(img, BayerPattern.RGGB)
        _, dirmap = demosaic_ahd(raw, return_direction=True)
        assert dirmap.shape == raw.data.shape
        assert (dirmap[8:-8, 8:-8] == 0.0).mean() >= 0.99

    def test_direction_map_on_horizontal_variation(self):
        img = LinearImage(gray_sinusoid(128, 128, 24, np.pi / 2))
        raw = bayer_sample(img, BayerPattern.RGGB)
        _, dirmap = demosaic_ahd(raw, return_direction=True)
        assert (dirmap[8:-8, 8:-8] == 1.0).mean() >= 0.99

    @pytest.mark.parametrize(
        "image",
        [
            gray_sinusoid(256, 256, 24, 0.0),
            gray_sinusoid(256, 256, 32, np.pi / 4),
            tinted_sinusoid(256, 256, 32),
        ],
        ids=["axis-aligned", "diagonal", "tinted"],
    )
    def test_beats_bilinear_on_smooth_gradients(self, image):
        img = LinearImage(image)
        raw = bayer_sample(img, BayerPattern.RGGB)
        p_ahd = psnr(demosaic_ahd(raw).data, img.data)
        p_bil = psnr(demosaic_bilinear(raw).data, img.data)
        assert p_ahd >= 40.0 and p_bil >= 40.0
        assert p_ahd >= p_bil

    def test_in_range_on_noisy_input(self):
        rng = np.random.default_rng(55)
        raw = BayerRaw(rng.random((24, 24)), BayerPattern.GRBG)
        out = demosaic_ahd(raw)
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0
