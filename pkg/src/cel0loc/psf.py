"""Gaussian point-spread-function model and its discrete kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# FWHM = 2 sqrt(2 ln 2) * sigma for a Gaussian profile
FWHM_FACTOR = 2.0 * math.sqrt(2.0 * math.log(2.0))


def sigma_from_fwhm(fwhm_nm: float) -> float:
    if not fwhm_nm > 0:
        raise ValidationError(f"FWHM must be > 0, got {fwhm_nm}")
    return fwhm_nm / FWHM_FACTOR


def default_radius(sigma_nm: float, pixel_size: float) -> int:
    """Truncation radius of ceil(4 sigma / pixel) pixels, > 99.99% of the mass."""
    return max(1, math.ceil(4.0 * sigma_nm / pixel_size))


@dataclass(frozen=True)
class PsfModel:
    """Isotropic Gaussian PSF with standard deviation sigma (nm) truncated at
    an integer radius in pixels of the grid it is discretized on."""

    sigma: float
    radius: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be > 0, got {self.sigma}")
        if self.radius < 1:
            raise ValidationError(f"radius must be >= 1, got {self.radius}")

    @classmethod
    def from_sigma(cls, sigma_nm: float, pixel_size: float) -> "PsfModel":
        return cls(sigma_nm, default_radius(sigma_nm, pixel_size))

    @property
    def fwhm(self) -> float:
        return FWHM_FACTOR * self.sigma


def gaussian_kernel(psf: PsfModel, pixel_size: float) -> np.ndarray:
    """Discrete Gaussian kernel of side 2*radius + 1, sampled at pixel centers
    and renormalized to unit sum (the continuous normalization constant is
    irrelevant after renormalization, which makes the blur flux-preserving)."""
    if not pixel_size > 0:
        raise ValidationError(f"pixel_size must be > 0, got {pixel_size}")
    r = psf.radius
    offsets = np.arange(-r, r + 1, dtype=np.float64) * pixel_size
    gauss_1d = np.exp(-(offsets**2) / (2.0 * psf.sigma**2))
    kernel = np.outer(gauss_1d, gauss_1d)
    total = kernel.sum()
    if not total > 0:
        raise ValidationError("kernel has zero mass; sigma/radius degenerate")
    return kernel / total
