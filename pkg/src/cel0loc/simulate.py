"""Ground-truth emitter generation, frame simulation, built-in test
scenarios, and synthetic training-set generation.

Seed handling: every stream is derived from the top-level seed through
numpy SeedSequence entropy tuples (seed, stream, index), so frames and
patches are reproducible independently of generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .forward import ForwardOperator
from .grids import Image, ImageGrid, nn_upsample
from .noise import scale_field_to_snr
from .psf import PsfModel, sigma_from_fwhm

TEST_FWHM_NM = 258.21
SCENARIO_NAMES = ("Test1a", "Test2a", "Test3a")

_STREAM_FRAME = 0
_STREAM_IMAGE = 1
_STREAM_PATCH = 2


def _rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(
        np.random.PCG64(np.random.SeedSequence((seed, stream, index))))


@dataclass(frozen=True)
class Emitter:
    x: float  # nm, along columns
    y: float  # nm, along rows
    intensity: float

    def __post_init__(self):
        if self.intensity < 0:
            raise ValidationError(f"intensity must be >= 0, got {self.intensity}")


@dataclass(frozen=True)
class EmitterList:
    frame_id: int
    emitters: tuple[Emitter, ...]

    def __post_init__(self):
        if self.frame_id < 1:
            raise ValidationError(f"frame_id must be >= 1, got {self.frame_id}")
        object.__setattr__(self, "emitters", tuple(self.emitters))

    def __len__(self) -> int:
        return len(self.emitters)


@dataclass(frozen=True)
class TrainingPair:
    input: Image
    target: Image


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    fov: ImageGrid  # HR grid
    emitters: EmitterList
    psf: PsfModel
    magnification: int
    snr_db: float


def render_emitters_to_hr(emitters: EmitterList, grid: ImageGrid) -> Image:
    """Accumulate each emitter's intensity into the HR pixel containing its
    position (floor of position / pixel_size)."""
    values = np.zeros(grid.shape)
    for idx, em in enumerate(emitters.emitters):
        col = math.floor(em.x / grid.pixel_size)
        row = math.floor(em.y / grid.pixel_size)
        if not (0 <= col < grid.width and 0 <= row < grid.height):
            raise ValidationError(
                f"emitter {idx} at ({em.x}, {em.y}) nm lies outside the "
                f"{grid.width_nm} x {grid.height_nm} nm FOV")
        values[row, col] += em.intensity
    return Image(grid, values)


def _noisy(clean: np.ndarray, target_db: float, rng: np.random.Generator
           ) -> np.ndarray:
    """Add a noise field scaled to the target SNR; an all-zero clean image
    (for which an SNR target is undefined) gets unit-variance noise."""
    fld = rng.standard_normal(clean.shape)
    if np.any(clean != 0):
        fld *= scale_field_to_snr(clean, fld, target_db)
    return clean + fld


def simulate_frame(spec: ScenarioSpec, seed: int) -> tuple[Image, Image]:
    """Render the HR truth and the noisy LR acquisition for one frame."""
    hr_truth = render_emitters_to_hr(spec.emitters, spec.fov)
    op = ForwardOperator(spec.fov, spec.magnification, spec.psf)
    clean = op.apply(hr_truth)
    lr = Image(clean.grid,
               _noisy(clean.values, spec.snr_db, _rng(seed, _STREAM_FRAME)))
    return lr, hr_truth


SCENARIO_INTENSITY = 100.0


def make_scenario(name: str, snr_db: float = 15.0,
                  intensity: float = SCENARIO_INTENSITY) -> ScenarioSpec:
    """The published synthetic geometries: 512 x 512 HR grid of 25 nm pixels,
    L = 4, Gaussian PSF of FWHM 258.21 nm.

    Test1a/2a place two emitters on the 256th column, 25 nm / 75 nm apart,
    rows centered around the middle of the FOV. The default intensity is a
    photon-count-like scale on which the published lambda range [1e-3, 1]
    is meaningful for unit-sum PSF kernels. Test3a places four emitters
    on a circle of radius 125 nm, two on the 256th column and two on the
    256th row.
    """
    if name not in SCENARIO_NAMES:
        raise ValidationError(
            f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")
    grid = ImageGrid(512, 512, 25.0)
    px = grid.pixel_size
    col_x = (255 + 0.5) * px  # center of the 256th column
    mid = col_x
    if name == "Test1a":
        rows = (255, 256)  # 25 nm = 1 HR pixel apart
        ems = [Emitter(col_x, (r + 0.5) * px, intensity) for r in rows]
    elif name == "Test2a":
        rows = (254, 257)  # 75 nm = 3 HR pixels apart
        ems = [Emitter(col_x, (r + 0.5) * px, intensity) for r in rows]
    else:
        radius = 125.0
        ems = [Emitter(mid, mid - radius, intensity),
               Emitter(mid, mid + radius, intensity),
               Emitter(mid - radius, mid, intensity),
               Emitter(mid + radius, mid, intensity)]
    psf = PsfModel.from_sigma(sigma_from_fwhm(TEST_FWHM_NM), px)
    return ScenarioSpec(name=name, fov=grid,
                        emitters=EmitterList(1, tuple(ems)),
                        psf=psf, magnification=4, snr_db=snr_db)


def gen_filament_frames(n_frames: int, fov: ImageGrid, n_filaments: int = 8,
                        emitters_per_frame: int = 15,
                        intensity: float = SCENARIO_INTENSITY,
                        seed: int = 0) -> list[EmitterList]:
    """Tubulin-like ground truth: emitters sampled along smooth random
    curves (quadratic Beziers spanning the FOV), one EmitterList per frame.

    The filament geometry is shared across frames, as with a fixed structure
    imaged over many activation cycles.
    """
    if n_frames < 1 or n_filaments < 1 or emitters_per_frame < 0:
        raise ValidationError("counts must be positive")
    geo = _rng(seed, _STREAM_IMAGE)
    w, h = fov.width_nm, fov.height_nm
    margin = 0.05
    curves = []
    for _ in range(n_filaments):
        pts = np.column_stack([
            geo.uniform(margin * w, (1 - margin) * w, 3),
            geo.uniform(margin * h, (1 - margin) * h, 3)])
        curves.append(pts)
    frames = []
    for f in range(n_frames):
        rng = _rng(seed, _STREAM_FRAME, f)
        ems = []
        for _ in range(emitters_per_frame):
            p0, p1, p2 = curves[int(rng.integers(n_filaments))]
            t = rng.uniform()
            pos = (1 - t) ** 2 * p0 + 2 * (1 - t) * t * p1 + t**2 * p2
            ems.append(Emitter(float(pos[0]), float(pos[1]),
                               intensity * rng.uniform(0.5, 1.5)))
        frames.append(EmitterList(f + 1, tuple(ems)))
    return frames


@dataclass(frozen=True)
class TrainingSetConfig:
    density: float = 6.0           # emitters per um^2
    n_images: int = 20
    fov: ImageGrid = field(default_factory=lambda: ImageGrid(64, 64, 100.0))
    patch: int = 26                # LR pixels
    magnification: int = 4
    k_patches: int = 10000
    psf: PsfModel | None = None    # default: FWHM 258.21 nm on the HR grid
    snr_db_range: tuple[float, float] = (12.0, 18.0)
    intensity_range: tuple[float, float] = (500.0, 1500.0)
    fixed_count: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.density < 0:
            raise ValidationError(f"density must be >= 0, got {self.density}")
        if self.n_images < 1 or self.k_patches < 1 or self.patch < 1:
            raise ValidationError("counts must be positive")
        if self.patch > min(self.fov.width, self.fov.height):
            raise ValidationError(
                f"patch side {self.patch} exceeds FOV {self.fov.shape}")


def _draw_emitters(cfg: TrainingSetConfig, image_index: int) -> EmitterList:
    rng = _rng(cfg.seed, _STREAM_IMAGE, image_index)
    area_um2 = (cfg.fov.width_nm / 1000.0) * (cfg.fov.height_nm / 1000.0)
    if cfg.fixed_count is not None:
        count = cfg.fixed_count
    else:
        count = int(rng.poisson(cfg.density * area_um2))
    lo, hi = cfg.intensity_range
    ems = []
    for _ in range(count):
        x = rng.uniform(0.0, cfg.fov.width_nm)
        y = rng.uniform(0.0, cfg.fov.height_nm)
        ems.append(Emitter(x, y, rng.uniform(lo, hi)))
    return EmitterList(image_index + 1, tuple(ems))


def gen_training_set(cfg: TrainingSetConfig) -> list[TrainingPair]:
    """Draw emitter fields, image them through the forward model, and cut
    noisy LR patches paired with their HR ground-truth projections.

    Per-patch SNR is drawn uniformly from snr_db_range to realize a spread
    of corruption levels around the configured average.
    """
    L = cfg.magnification
    hr_grid = cfg.fov.refine(L)
    psf = cfg.psf or PsfModel.from_sigma(sigma_from_fwhm(TEST_FWHM_NM),
                                         hr_grid.pixel_size)
    op = ForwardOperator(hr_grid, L, psf)

    hr_truths, lr_cleans = [], []
    for i in range(cfg.n_images):
        hr = render_emitters_to_hr(_draw_emitters(cfg, i), hr_grid)
        hr_truths.append(hr.values)
        lr_cleans.append(op.apply(hr).values)

    p = cfg.patch
    patch_grid = ImageGrid(p, p, cfg.fov.pixel_size)
    target_grid = patch_grid.refine(L)
    lo_db, hi_db = cfg.snr_db_range
    pairs = []
    for k in range(cfg.k_patches):
        rng = _rng(cfg.seed, _STREAM_PATCH, k)
        img = int(rng.integers(cfg.n_images))
        r0 = int(rng.integers(cfg.fov.height - p + 1))
        c0 = int(rng.integers(cfg.fov.width - p + 1))
        clean = lr_cleans[img][r0:r0 + p, c0:c0 + p]
        noisy = _noisy(clean, rng.uniform(lo_db, hi_db), rng)
        inp = nn_upsample(Image(patch_grid, noisy), L)
        target = Image(target_grid,
                       hr_truths[img][L * r0:L * (r0 + p), L * c0:L * (c0 + p)])
        pairs.append(TrainingPair(input=inp, target=target))
    return pairs
