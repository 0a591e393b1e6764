"""Pixel grids, images, and nearest-neighbour upsampling.

Coordinate convention: origin at the top-left corner, x along columns and
y along rows, positions in nm. The center of pixel (row r, col c) sits at
((c + 0.5) * pixel_size, (r + 0.5) * pixel_size).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ImageGrid:
    """A rectangular pixel grid with a physical pixel size in nm."""

    width: int
    height: int
    pixel_size: float

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError(
                f"grid dimensions must be >= 1, got {self.width}x{self.height}"
            )
        if not self.pixel_size > 0:
            raise ValidationError(f"pixel_size must be > 0, got {self.pixel_size}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def width_nm(self) -> float:
        return self.width * self.pixel_size

    @property
    def height_nm(self) -> float:
        return self.height * self.pixel_size

    def refine(self, factor: int) -> "ImageGrid":
        """The factor-times finer grid covering the same field of view."""
        if factor < 1:
            raise ValidationError(f"refinement factor must be >= 1, got {factor}")
        return ImageGrid(self.width * factor, self.height * factor,
                         self.pixel_size / factor)


@dataclass(frozen=True)
class Image:
    """A 2D scalar field on a grid. Values are stored as a (height, width) array."""

    grid: ImageGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise ValidationError(
                f"values shape {values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("image contains non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: ImageGrid) -> "Image":
        return cls(grid, np.zeros(grid.shape))


def nn_upsample(image: Image, factor: int) -> Image:
    """Replicate each pixel into a factor x factor block on a finer grid."""
    if factor < 1:
        raise ValidationError(f"upsampling factor must be >= 1, got {factor}")
    if factor == 1:
        return image
    fine = image.grid.refine(factor)
    values = np.repeat(np.repeat(image.values, factor, axis=0), factor, axis=1)
    return Image(fine, values)
