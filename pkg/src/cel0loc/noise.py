"""Additive Gaussian noise, SNR measurement, and SNR-targeted corruption.

All randomness goes through numpy's PCG64 generator seeded explicitly, so a
given (seed, sigma) pair reproduces the noise field bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grids import Image


@dataclass(frozen=True)
class NoiseModel:
    """i.i.d. zero-mean Gaussian noise of standard deviation sigma_eta."""

    sigma_eta: float
    seed: int

    def __post_init__(self):
        if self.sigma_eta < 0:
            raise ValidationError(f"sigma_eta must be >= 0, got {self.sigma_eta}")


def _draw_field(shape: tuple[int, int], seed: int) -> np.ndarray:
    return np.random.default_rng(np.random.PCG64(seed)).standard_normal(shape)


def add_gaussian_noise(image: Image, noise: NoiseModel) -> Image:
    if noise.sigma_eta == 0:
        return image
    field = _draw_field(image.grid.shape, noise.seed)
    return Image(image.grid, image.values + noise.sigma_eta * field)


def snr_db(clean: Image, noisy: Image) -> float:
    """10 log10(||clean||^2 / ||clean - noisy||^2).

    Returns math.inf (the infinite-SNR sentinel) for a zero residual.
    """
    if clean.grid != noisy.grid:
        raise ValidationError("clean and noisy images are on different grids")
    signal = float(np.sum(clean.values**2))
    if signal == 0.0:
        raise ValidationError("clean image is identically zero; SNR undefined")
    residual = float(np.sum((clean.values - noisy.values) ** 2))
    if residual == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / residual)


def scale_field_to_snr(clean_values: np.ndarray, field: np.ndarray,
                       target_db: float) -> float:
    """Scale for a standard-normal field so the realized SNR is exactly
    target_db: ||scale * field||^2 = ||clean||^2 / 10^(target/10)."""
    if not math.isfinite(target_db):
        raise ValidationError(f"target SNR must be finite, got {target_db}")
    signal = float(np.sum(clean_values**2))
    if signal == 0.0:
        raise ValidationError("clean image is identically zero; cannot target SNR")
    field_norm = float(np.linalg.norm(field))
    if field_norm == 0.0:  # degenerate only for pathological RNG output
        raise ValidationError("drawn noise field is identically zero")
    return math.sqrt(signal / 10.0 ** (target_db / 10.0)) / field_norm


def noise_for_target_snr(clean: Image, target_db: float,
                         seed: int) -> tuple[NoiseModel, Image]:
    """Draw a noise realization and scale it so the realized SNR is exact.

    The drawn standard-normal field is rescaled so that the measured
    snr_db(clean, noisy) equals target_db (up to rounding), rather than
    matching the target only in expectation.
    """
    field = _draw_field(clean.grid.shape, seed)
    scale = scale_field_to_snr(clean.values, field, target_db)
    noisy = Image(clean.grid, clean.values + scale * field)
    sigma = scale  # field is standard normal, so the realization std is ~scale
    return NoiseModel(sigma, seed), noisy
