"""Dual-branch network: raw restoration plus pixel-wise color correction.

The restoration branch packs the Bayer mosaic into four half-resolution
channels, runs a dense-block encoder-decoder and reconstructs a linear
RGB image through a 48-channel sub-pixel layer (factor 4). The color
branch encodes the rendered reference with three pooled convolution
stages, receives the restoration bottleneck through a zero-initialized
1x1 fusion convolution, and decodes per-pixel 3x3 color matrices at the
output resolution. The final image is the per-pixel matrix product of
the field with the restored linear image.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

# (row, col) sub-lattice of each packed channel in (R, G, B, G) order
# for the RGGB pattern used by the generated datasets.
PACK_OFFSETS = {
    "RGGB": ((0, 0), (0, 1), (1, 1), (1, 0)),
    "BGGR": ((1, 1), (0, 1), (0, 0), (1, 0)),
    "GRBG": ((0, 1), (0, 0), (1, 0), (1, 1)),
    "GBRG": ((1, 0), (0, 0), (0, 1), (1, 1)),
}


def pack_raw(raw: torch.Tensor, pattern: str = "RGGB") -> torch.Tensor:
    """(..., H, W) mosaic -> (..., 4, H/2, W/2) channels in (R, G, B, G) order."""
    if raw.shape[-1] % 2 or raw.shape[-2] % 2:
        raise ValueError("raw dimensions must be even")
    offsets = PACK_OFFSETS[pattern]
    planes = [raw[..., r::2, c::2] for (r, c) in offsets]
    return torch.stack(planes, dim=-3)


def unpack_raw(packed: torch.Tensor, pattern: str = "RGGB") -> torch.Tensor:
    """Inverse scatter of pack_raw."""
    h, w = packed.shape[-2] * 2, packed.shape[-1] * 2
    out = packed.new_zeros(packed.shape[:-3] + (h, w))
    for ch, (r, c) in enumerate(PACK_OFFSETS[pattern]):
        out[..., r::2, c::2] = packed[..., ch, :, :]
    return out


class DenseBlock(nn.Module):
    """Eight densely connected 3x3 convolutions plus a 1x1 transition."""

    def __init__(self, channels: int, growth: int, layers: int = 8):
        super().__init__()
        self.convs = nn.ModuleList(
            nn.Conv2d(channels + i * growth, growth, 3, padding=1)
            for i in range(layers)
        )
        self.transition = nn.Conv2d(channels + layers * growth, channels, 1)
        self.act = nn.LeakyReLU(0.2, inplace=True)

    def forward(self, x):
        feats = [x]
        for conv in self.convs:
            feats.append(self.act(conv(torch.cat(feats, dim=1))))
        return self.transition(torch.cat(feats, dim=1))


class RestorationNet(nn.Module):
    """Dense-block encoder-decoder from packed raw to linear RGB at 4x.

    Also exposes the encoder bottleneck (g1) for feature fusion.
    """

    DOWNSAMPLE_FACTOR = 4  # two 2x2 pooling stages

    def __init__(self, width: int = 16, growth: int = 8):
        super().__init__()
        self.conv_in = nn.Conv2d(4, width, 3, padding=1)
        self.block1 = DenseBlock(width, growth)
        self.block2 = DenseBlock(width, growth)
        self.block3 = DenseBlock(width, growth)
        self.reduce2 = nn.Conv2d(2 * width, width, 3, padding=1)
        self.block4 = DenseBlock(width, growth)
        self.reduce1 = nn.Conv2d(2 * width, width, 3, padding=1)
        self.conv_out = nn.Conv2d(width, 48, 3, padding=1)
        self.act = nn.LeakyReLU(0.2, inplace=True)
        self.width = width

    def forward(self, packed):
        if packed.shape[-1] % self.DOWNSAMPLE_FACTOR or packed.shape[-2] % self.DOWNSAMPLE_FACTOR:
            raise ValueError(
                f"packed size must be divisible by {self.DOWNSAMPLE_FACTOR}"
            )
        f1 = self.block1(self.act(self.conv_in(packed)))
        f2 = self.block2(F.avg_pool2d(f1, 2))
        g1 = self.block3(F.avg_pool2d(f2, 2))
        d2 = F.interpolate(g1, scale_factor=2, mode="nearest")
        d2 = self.block4(self.act(self.reduce2(torch.cat([d2, f2], dim=1))))
        d1 = F.interpolate(d2, scale_factor=2, mode="nearest")
        d1 = self.act(self.reduce1(torch.cat([d1, f1], dim=1)))
        feats48 = self.conv_out(d1)
        # 48 = 3 * 4^2: sub-pixel rearrangement to 3 channels at 4x
        x_lin = F.pixel_shuffle(feats48, 4)
        return x_lin, g1


class ColorNet(nn.Module):
    """U-Net predicting one 3x3 matrix per output pixel from the reference.

    Input is the reference at half the output resolution; the decoder has
    one more upsampling than the encoder has poolings, so the 9-channel
    field comes out at the full output resolution.
    """

    DOWNSAMPLE_FACTOR = 8  # three 2x2 pooling stages

    def __init__(self, width: int = 8, fusion_in: int = 16):
        super().__init__()
        w = width
        self.enc1 = nn.Conv2d(3, w, 3, padding=1)
        self.enc2 = nn.Conv2d(w, 2 * w, 3, padding=1)
        self.enc3 = nn.Conv2d(2 * w, 4 * w, 3, padding=1)
        # Eq. (4) fusion: 1x1 convolution, zero-initialized
        self.phi = nn.Conv2d(fusion_in, 4 * w, 1)
        nn.init.zeros_(self.phi.weight)
        nn.init.zeros_(self.phi.bias)
        self.dec3 = nn.Conv2d(4 * w + 4 * w, 2 * w, 3, padding=1)
        self.dec2 = nn.Conv2d(2 * w + 2 * w, w, 3, padding=1)
        self.dec1 = nn.Conv2d(w + w, w, 3, padding=1)
        self.out = nn.Conv2d(w, 9, 3, padding=1)
        self.act = nn.LeakyReLU(0.2, inplace=True)

    def fuse_features(self, g2: torch.Tensor, g1: torch.Tensor | None) -> torch.Tensor:
        """g2 <- g2 + phi(g1), with g1 resampled (nearest) to g2's grid."""
        if g1 is None:
            return g2
        if g1.shape[1] != self.phi.in_channels:
            raise ValueError(
                f"fusion expects {self.phi.in_channels} channels, got {g1.shape[1]}"
            )
        if g1.shape[-2:] != g2.shape[-2:]:
            g1 = F.interpolate(g1, size=g2.shape[-2:], mode="nearest")
        return g2 + self.phi(g1)

    def forward(self, x_ref, g1=None):
        if x_ref.shape[-1] % self.DOWNSAMPLE_FACTOR or x_ref.shape[-2] % self.DOWNSAMPLE_FACTOR:
            raise ValueError(
                f"reference size must be divisible by {self.DOWNSAMPLE_FACTOR}"
            )
        f1 = self.act(self.enc1(x_ref))
        f2 = self.act(self.enc2(F.avg_pool2d(f1, 2)))
        f3 = self.act(self.enc3(F.avg_pool2d(f2, 2)))
        g2 = F.avg_pool2d(f3, 2)
        g2 = self.fuse_features(g2, g1)
        d3 = F.interpolate(g2, scale_factor=2, mode="nearest")
        d3 = self.act(self.dec3(torch.cat([d3, f3], dim=1)))
        d2 = F.interpolate(d3, scale_factor=2, mode="nearest")
        d2 = self.act(self.dec2(torch.cat([d2, f2], dim=1)))
        d1 = F.interpolate(d2, scale_factor=2, mode="nearest")
        d1 = self.act(self.dec1(torch.cat([d1, f1], dim=1)))
        # one more upsampling than poolings: field at 2x the reference
        d0 = F.interpolate(d1, scale_factor=2, mode="nearest")
        return self.out(d0)  # (N, 9, H, W)


def apply_field(field: torch.Tensor, x_lin: torch.Tensor) -> torch.Tensor:
    """Per-pixel 3x3 matrix product: out[i,j] = M[i,j] @ x[i,j].

    field is (N, 9, H, W) with row-major matrices, x_lin is (N, 3, H, W).
    """
    n, _, h, w = field.shape
    m = field.reshape(n, 3, 3, h, w)
    return torch.einsum("nabhw,nbhw->nahw", m, x_lin)


class DualNet(nn.Module):
    """Full model: X_raw + X_ref -> (X_hat, X_hat_lin, field)."""

    def __init__(self, rest_width: int = 16, growth: int = 8, color_width: int = 8,
                 pattern: str = "RGGB"):
        super().__init__()
        self.pattern = pattern
        self.restoration = RestorationNet(rest_width, growth)
        self.color = ColorNet(color_width, fusion_in=rest_width)

    def forward(self, x_raw: torch.Tensor, x_ref: torch.Tensor):
        """x_raw (N, H, W) mosaic in [0,1]; x_ref (N, 3, H, W) in [0,1]."""
        packed = pack_raw(x_raw, self.pattern)
        x_lin, g1 = self.restoration(packed)
        field = self.color(x_ref, g1)
        x_hat = apply_field(field, x_lin)
        return x_hat, x_lin, field


def init_weights(model: nn.Module, seed: int = 0):
    """Deterministic Xavier initialization (fusion phi stays zero)."""
    gen = torch.Generator().manual_seed(seed)
    for name, mod in model.named_modules():
        if isinstance(mod, nn.Conv2d) and not name.endswith("phi"):
            nn.init.xavier_uniform_(mod.weight, generator=gen)
            nn.init.zeros_(mod.bias)
    return model


def export_field(field: torch.Tensor) -> np.ndarray:
    """(9, H, W) or (1, 9, H, W) tensor -> H x W x 9 interchange array."""
    f = field.detach()
    if f.ndim == 4:
        if f.shape[0] != 1:
            raise ValueError("export expects a single field")
        f = f[0]
    return f.permute(1, 2, 0).cpu().numpy().astype(np.float64)
