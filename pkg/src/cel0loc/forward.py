"""The blur-and-downsample forward operator A = S_L K and its adjoint.

K is a zero-padded ("same") convolution with the discrete Gaussian PSF
kernel; S_L downsamples by the magnification factor L, either by pure
decimation (sampling the top-left pixel of each L x L block, the default)
or by L x L block averaging.

Convolutions cache the kernel FFT once per operator, since the solver
applies A and its adjoint thousands of times per frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft
from scipy import signal

from .errors import ValidationError
from .grids import Image, ImageGrid
from .psf import PsfModel, gaussian_kernel

DOWNSAMPLE_MODES = ("decimate", "average")


class _CachedConv2d:
    """Zero-padded 'same' 2D convolution with a precomputed kernel FFT."""

    def __init__(self, shape: tuple[int, int], kernel: np.ndarray):
        self.shape = shape
        self.radius = kernel.shape[0] // 2
        full = (shape[0] + kernel.shape[0] - 1, shape[1] + kernel.shape[1] - 1)
        self.fshape = tuple(sp_fft.next_fast_len(n, real=True) for n in full)
        self.kernel_fft = sp_fft.rfft2(kernel, self.fshape)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        r = self.radius
        out = sp_fft.irfft2(sp_fft.rfft2(x, self.fshape) * self.kernel_fft,
                            self.fshape)
        return out[r:r + self.shape[0], r:r + self.shape[1]]


@dataclass(frozen=True)
class ForwardOperator:
    """A = S_L K mapping an N x N HR map to an M x M LR frame, N = L * M."""

    hr_grid: ImageGrid
    magnification: int
    psf: PsfModel
    downsample: str = "decimate"

    def __post_init__(self):
        if self.magnification < 1:
            raise ValidationError(
                f"magnification must be >= 1, got {self.magnification}")
        if self.hr_grid.width % self.magnification or \
                self.hr_grid.height % self.magnification:
            raise ValidationError(
                f"HR grid {self.hr_grid.shape} is not divisible by "
                f"L={self.magnification}")
        if self.downsample not in DOWNSAMPLE_MODES:
            raise ValidationError(
                f"downsample must be one of {DOWNSAMPLE_MODES}, "
                f"got {self.downsample!r}")
        kernel = gaussian_kernel(self.psf, self.hr_grid.pixel_size)
        object.__setattr__(self, "_kernel", kernel)
        object.__setattr__(self, "_conv", _CachedConv2d(self.hr_grid.shape, kernel))
        object.__setattr__(self, "_norms", None)

    @property
    def kernel(self) -> np.ndarray:
        return self._kernel

    @property
    def lr_grid(self) -> ImageGrid:
        L = self.magnification
        return ImageGrid(self.hr_grid.width // L, self.hr_grid.height // L,
                         self.hr_grid.pixel_size * L)

    def _check_hr(self, x: Image):
        if x.grid != self.hr_grid:
            raise ValidationError(
                f"image grid {x.grid} does not match HR grid {self.hr_grid}")

    def _check_lr(self, y: Image):
        if y.grid != self.lr_grid:
            raise ValidationError(
                f"image grid {y.grid} does not match LR grid {self.lr_grid}")

    def apply(self, x: Image) -> Image:
        """S_L (K x): blur then downsample."""
        self._check_hr(x)
        blurred = self._conv(x.values)
        L = self.magnification
        if self.downsample == "decimate":
            low = blurred[::L, ::L]
        else:
            h, w = self.lr_grid.shape
            low = blurred.reshape(h, L, w, L).mean(axis=(1, 3))
        return Image(self.lr_grid, low)

    def adjoint(self, y: Image) -> Image:
        """(S_L K)^T y = K^T S_L^T y; K^T = K for the symmetric kernel."""
        self._check_lr(y)
        L = self.magnification
        up = np.zeros(self.hr_grid.shape)
        if self.downsample == "decimate":
            up[::L, ::L] = y.values
        else:
            up = np.repeat(np.repeat(y.values, L, axis=0), L, axis=1) / (L * L)
        return Image(self.hr_grid, self._conv(up))

    def column_norms(self) -> np.ndarray:
        """Euclidean norms ||c_i|| of the columns of S_L K, as an HR-shaped array.

        Column i holds the kernel (block-summed, for averaging) sampled on the
        coarse lattice around HR pixel i, so ||c_i||^2 is the correlation of the
        lattice indicator with the squared (effective) kernel at i.
        """
        if self._norms is None:
            object.__setattr__(self, "_norms", self._compute_column_norms())
        return self._norms

    def _compute_column_norms(self) -> np.ndarray:
        L = self.magnification
        comb = np.zeros(self.hr_grid.shape)
        comb[::L, ::L] = 1.0
        if self.downsample == "decimate":
            eff = self._kernel
            scale = 1.0
        else:
            # effective kernel of Dec o (L x L block sum) o K
            eff = signal.convolve(self._kernel, np.ones((L, L)), mode="full")
            scale = 1.0 / L**4
        w2 = eff**2
        r = self._kernel.shape[0] // 2
        # out[i] = sum_d comb[i + d] * w2[d], d in [-(pad_before), pad_after]
        pad_before = w2.shape[0] - 1 - r
        pad_after = r
        padded = np.pad(comb, ((pad_before, pad_after), (pad_before, pad_after)))
        sq = signal.fftconvolve(padded, w2[::-1, ::-1], mode="valid") * scale
        np.clip(sq, 0.0, None, out=sq)
        return np.sqrt(sq)
