"""The localization network: a seven-layer convolutional encoder-decoder.

Encoder 32/64/128 with two 2x2 max-pools, a 512-channel bottleneck, decoder
128/64/32 with two nearest-neighbour upsamples, and a final 1x1 convolution
with ReLU so outputs are nonnegative. Every 3x3 layer is convolution +
batch normalization + ReLU. The network is fully convolutional: any input
whose sides are multiples of 4 maps to an output of the same spatial shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from .errors import ValidationError


@dataclass(frozen=True)
class NetConfig:
    encoder_depths: tuple[int, ...] = (32, 64, 128)
    bottleneck_depth: int = 512
    decoder_depths: tuple[int, ...] = (128, 64, 32)
    kernel_size: int = 3
    pool: int = 2

    def __post_init__(self):
        if len(self.encoder_depths) != len(self.decoder_depths):
            raise ValidationError(
                "encoder and decoder must have the same number of stages")
        if min(self.encoder_depths + self.decoder_depths +
               (self.bottleneck_depth,)) < 1:
            raise ValidationError("channel depths must be positive")
        if self.kernel_size % 2 != 1:
            raise ValidationError("kernel size must be odd")
        if self.pool < 2:
            raise ValidationError("pool factor must be >= 2")


def _conv_block(c_in: int, c_out: int, k: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, k, padding=k // 2),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


class LocalizationNet(nn.Module):
    def __init__(self, cfg: NetConfig = NetConfig()):
        super().__init__()
        self.cfg = cfg
        k, p = cfg.kernel_size, cfg.pool
        e1, e2, e3 = cfg.encoder_depths
        d1, d2, d3 = cfg.decoder_depths

        self.enc1 = _conv_block(1, e1, k)
        self.pool1 = nn.MaxPool2d(p)
        self.enc2 = _conv_block(e1, e2, k)
        self.pool2 = nn.MaxPool2d(p)
        self.enc3 = _conv_block(e2, e3, k)
        self.bottleneck = _conv_block(e3, cfg.bottleneck_depth, k)
        self.up1 = nn.Upsample(scale_factor=p, mode="nearest")
        self.dec1 = _conv_block(cfg.bottleneck_depth, d1, k)
        self.dec2 = _conv_block(d1, d2, k)
        self.up2 = nn.Upsample(scale_factor=p, mode="nearest")
        self.dec3 = _conv_block(d2, d3, k)
        self.head = nn.Conv2d(d3, 1, kernel_size=1)
        # Positive bias keeps the output ReLU alive early in training: with
        # sparse nonnegative targets, the first descent steps push the whole
        # map down, and a zero-initialized head can saturate at an all-zero
        # output with no gradient.
        nn.init.constant_(self.head.bias, 1.0)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != 1:
            raise ValidationError(
                f"expected input of shape (batch, 1, h, w), got {tuple(x.shape)}")
        factor = self.cfg.pool ** 2
        if x.shape[2] % factor or x.shape[3] % factor:
            raise ValidationError(
                f"spatial sides must be multiples of {factor}, "
                f"got {tuple(x.shape[2:])}")
        h = self.enc1(x)
        h = self.enc2(self.pool1(h))
        h = self.enc3(self.pool2(h))
        h = self.bottleneck(h)
        h = self.dec1(self.up1(h))
        h = self.dec2(h)
        h = self.dec3(self.up2(h))
        return torch.relu(self.head(h))


def build_network(cfg: NetConfig = NetConfig()) -> LocalizationNet:
    return LocalizationNet(cfg)
