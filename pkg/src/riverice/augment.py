"""Training patch generation and per-patch pixel selection.

Patches come from a random-stride sliding window run over the unrotated image
and over one randomly rotated copy per rotation band.  Every window also yields
its horizontal and vertical mirror images.

Randomness is drawn from independent streams keyed by (source, variant, axis),
so the patches of one image never depend on which other images are augmented
alongside it.
"""
from __future__ import annotations

import enum
import math
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .core import N_CLASSES, ClassId, validate_mask
from .errors import DegenerateCrop, DimensionMismatch, PatchTooLarge

SUPPORTED_PATCH_SIZES = (256, 384, 512, 640, 800, 1000)
MIN_PATCH_SIZE = 32

FLIPS = ("none", "horizontal", "vertical")
_FLIP_CODES = {"none": "f", "horizontal": "h", "vertical": "v"}

_ROWS, _COLS, _ANGLES = 0, 1, 2


def source_key(source_id: str) -> int:
    """Stable 32-bit key for a source name (independent of PYTHONHASHSEED)."""
    return zlib.crc32(source_id.encode("utf-8"))


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the given seed and integer spawn key."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


@dataclass(frozen=True)
class AugmentParams:
    patch_size: int = 640
    stride_frac_min: float = 0.10
    stride_frac_max: float = 0.40
    rotation_min: float = 15.0
    rotation_max: float = 345.0
    rotation_bands: int = 4
    angles_per_band: int = 1
    flips: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.patch_size < MIN_PATCH_SIZE:
            raise ValueError(f"patch size must be >= {MIN_PATCH_SIZE}")
        if not 0 < self.stride_frac_min <= self.stride_frac_max <= 1:
            raise ValueError("need 0 < stride_frac_min <= stride_frac_max <= 1")
        if not self.rotation_min < self.rotation_max:
            raise ValueError("rotation_min must be below rotation_max")
        if self.rotation_bands < 1 or self.angles_per_band < 0:
            raise ValueError("rotation_bands must be >= 1 and angles_per_band >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def bands(self) -> list[tuple[float, float]]:
        return rotation_bands(self.rotation_min, self.rotation_max, self.rotation_bands)


def rotation_bands(lo: float = 15.0, hi: float = 345.0, n: int = 4) -> list[tuple[float, float]]:
    """Split ``[lo, hi)`` into ``n`` half-open bands of equal width."""
    width = (hi - lo) / n
    return [(lo + b * width, lo + (b + 1) * width) for b in range(n)]


def stride_bounds(patch_size: int, stride_frac_range: tuple[float, float]) -> tuple[int, int]:
    lo = max(1, math.ceil(stride_frac_range[0] * patch_size - 1e-9))
    hi = max(lo, math.floor(stride_frac_range[1] * patch_size + 1e-9))
    return lo, hi


def _axis_origins(length: int, patch_size: int, lo: int, hi: int, rng: np.random.Generator) -> list[int]:
    last = length - patch_size
    origins = [0]
    while True:
        nxt = origins[-1] + int(rng.integers(lo, hi + 1))
        if nxt >= last:
            break
        origins.append(nxt)
    if origins[-1] != last:
        origins.append(last)
    return origins


def plan_windows(height: int, width: int, patch_size: int,
                 stride_frac_range: tuple[float, float] = (0.10, 0.40),
                 rng=0) -> list[tuple[int, int]]:
    """Row-major window origins for a random-stride sliding window.

    Each axis starts at 0 and advances by strides drawn uniformly from
    ``[ceil(min*K), floor(max*K)]``; the origin flush with the far border is
    always included.  ``rng`` is an integer seed or ``SeedSequence`` (split into
    one stream per axis), a single ``Generator`` (rows drawn first), or a
    ``(row_rng, col_rng)`` pair.
    """
    if patch_size > height or patch_size > width:
        raise PatchTooLarge(f"patch size {patch_size} exceeds image {height}x{width}")
    if isinstance(rng, tuple):
        row_rng, col_rng = rng
    elif isinstance(rng, np.random.Generator):
        row_rng = col_rng = rng
    else:
        seq = rng if isinstance(rng, np.random.SeedSequence) else np.random.SeedSequence(rng)
        row_rng, col_rng = (np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(2))
    lo, hi = stride_bounds(patch_size, stride_frac_range)
    rows = _axis_origins(height, patch_size, lo, hi, row_rng)
    cols = _axis_origins(width, patch_size, lo, hi, col_rng)
    return [(r, c) for r in rows for c in cols]


def inscribed_size(height: int, width: int, angle: float) -> tuple[int, int]:
    """Largest axis-aligned (height, width) inside a ``height x width`` frame rotated by ``angle`` degrees."""
    theta = math.radians(angle)
    sin_a, cos_a = abs(math.sin(theta)), abs(math.cos(theta))
    long_side, short_side = max(width, height), min(width, height)
    if short_side <= 2.0 * sin_a * cos_a * long_side or abs(sin_a - cos_a) < 1e-12:
        # two crop corners touch the longer sides
        half = 0.5 * short_side
        if width >= height:
            wr, hr = half / sin_a, half / cos_a
        else:
            wr, hr = half / cos_a, half / sin_a
    else:
        cos_2a = cos_a * cos_a - sin_a * sin_a
        wr = (width * cos_a - height * sin_a) / cos_2a
        hr = (height * cos_a - width * sin_a) / cos_2a
    return math.floor(hr + 1e-9), math.floor(wr + 1e-9)


def rotate_and_crop(image: np.ndarray, mask: np.ndarray, angle: float):
    """Rotate image and labels counterclockwise about the centre, keep the inscribed rectangle.

    The image is resampled bilinearly, the labels by nearest neighbour, so the
    crop never holds fill values.  Multiples of 90 degrees are exact.
    """
    mask = validate_mask(mask)
    if image.shape[:2] != mask.shape:
        raise DimensionMismatch(f"image {image.shape[:2]} vs mask {mask.shape}")
    if not 0 < angle < 360:
        raise ValueError("angle must lie in (0, 360)")
    quarter = angle / 90.0
    if quarter == int(quarter):
        k = int(quarter)
        return np.rot90(image, k).copy(), np.rot90(mask, k).copy()

    height, width = mask.shape
    out_h, out_w = inscribed_size(height, width, angle)
    if out_h < 1 or out_w < 1:
        raise DegenerateCrop(f"no pixel survives a {angle} degree rotation of {height}x{width}")
    theta = math.radians(angle)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    y = np.arange(out_h, dtype=np.float64)[:, None] - (out_h - 1) / 2.0
    x = np.arange(out_w, dtype=np.float64)[None, :] - (out_w - 1) / 2.0
    src_x = np.clip(cos_t * x - sin_t * y + (width - 1) / 2.0, 0, width - 1)
    src_y = np.clip(sin_t * x + cos_t * y + (height - 1) / 2.0, 0, height - 1)
    coords = np.stack([src_y, src_x])

    labels = ndimage.map_coordinates(mask, coords, order=0, mode="nearest")
    channels = image[..., None] if image.ndim == 2 else image
    rotated = np.empty((out_h, out_w, channels.shape[2]), dtype=np.uint8)
    for c in range(channels.shape[2]):
        plane = ndimage.map_coordinates(channels[..., c].astype(np.float64), coords, order=1, mode="nearest")
        rotated[..., c] = np.clip(np.rint(plane), 0, 255)
    if image.ndim == 2:
        rotated = rotated[..., 0]
    return rotated, labels.astype(np.uint8)


@dataclass(frozen=True)
class Patch:
    image: np.ndarray
    labels: np.ndarray
    source: str
    row: int
    col: int
    angle: Optional[float] = None
    flip: str = "none"

    @property
    def name(self) -> str:
        """File stem ``<src>_<row>_<col>_r<angle|0>_<f|h|v>``."""
        angle = "0" if self.angle is None else f"{self.angle:.2f}"
        return f"{self.source}_{self.row}_{self.col}_r{angle}_{_FLIP_CODES[self.flip]}"


def flip_patch(image: np.ndarray, flip: str) -> np.ndarray:
    if flip == "none":
        return image
    if flip == "horizontal":
        return image[:, ::-1]
    if flip == "vertical":
        return image[::-1]
    raise ValueError(f"unknown flip {flip!r}")


def _variants(image, mask, params: AugmentParams, key: int):
    yield 0, None, image, mask
    for b, (lo, hi) in enumerate(params.bands()):
        angles = stream(params.seed, key, 1 + b, _ANGLES).uniform(lo, hi, size=params.angles_per_band)
        for k, angle in enumerate(angles):
            variant = 1 + b * max(params.angles_per_band, 1) + k
            try:
                rot_image, rot_mask = rotate_and_crop(image, mask, float(angle))
            except DegenerateCrop:
                continue
            yield variant, float(angle), rot_image, rot_mask


def augment_image(image: np.ndarray, mask: np.ndarray, params: AugmentParams,
                  source: str = "image") -> list[Patch]:
    """All augmented K x K patches of one labelled image, in a deterministic order.

    Rotated copies whose inscribed crop is smaller than K are skipped.
    """
    mask = validate_mask(mask)
    if image.shape[:2] != mask.shape:
        raise DimensionMismatch(f"image {image.shape[:2]} vs mask {mask.shape}")
    K = params.patch_size
    if K > mask.shape[0] or K > mask.shape[1]:
        raise PatchTooLarge(f"patch size {K} exceeds image {mask.shape[0]}x{mask.shape[1]}")
    key = source_key(source)
    flips = FLIPS if params.flips else FLIPS[:1]
    stride_range = (params.stride_frac_min, params.stride_frac_max)
    patches = []
    for variant, angle, var_image, var_mask in _variants(image, mask, params, key):
        height, width = var_mask.shape
        if K > height or K > width:
            continue
        rngs = (stream(params.seed, key, variant, _ROWS), stream(params.seed, key, variant, _COLS))
        for row, col in plan_windows(height, width, K, stride_range, rngs):
            win_image = var_image[row:row + K, col:col + K]
            win_mask = var_mask[row:row + K, col:col + K]
            for flip in flips:
                patches.append(Patch(flip_patch(win_image, flip), flip_patch(win_mask, flip),
                                     source, row, col, angle, flip))
    return patches


# -- pixel selection --------------------------------------------------------

class Policy(str, enum.Enum):
    DISCARD = "discard"
    TAKE_ALL = "take_all"


@dataclass(frozen=True)
class PixelSelection:
    """Pixels whose labels take part in the loss for one patch."""

    rows: np.ndarray
    cols: np.ndarray
    classes: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def counts_per_class(self) -> np.ndarray:
        return np.bincount(self.classes, minlength=N_CLASSES)[:N_CLASSES]


def sample_class_balanced_pixels(mask: np.ndarray, n_per_class: int, policy=Policy.DISCARD,
                                 rng=None) -> Optional[PixelSelection]:
    """Draw ``n_per_class`` distinct pixels of every scored class without replacement.

    Returns None (the unit is discarded) under ``Policy.DISCARD`` when some
    class has fewer than ``n_per_class`` pixels.  Under ``Policy.TAKE_ALL``
    such classes contribute every pixel they have.
    """
    mask = validate_mask(mask)
    policy = Policy(policy)
    if n_per_class < 1:
        raise ValueError("n_per_class must be positive")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    flat = mask.ravel()
    members = [np.flatnonzero(flat == c) for c in range(N_CLASSES)]
    if policy is Policy.DISCARD and min(len(m) for m in members) < n_per_class:
        return None
    chosen, classes = [], []
    for c, idx in enumerate(members):
        if len(idx) > n_per_class:
            idx = np.sort(idx[rng.choice(len(idx), n_per_class, replace=False)])
        chosen.append(idx)
        classes.append(np.full(len(idx), c, dtype=np.int64))
    flat_idx = np.concatenate(chosen)
    rows, cols = np.divmod(flat_idx, mask.shape[1])
    return PixelSelection(rows, cols, np.concatenate(classes))


def selected_labels(mask: np.ndarray, selection: PixelSelection) -> np.ndarray:
    labels = np.asarray(mask)[selection.rows, selection.cols]
    if (labels == ClassId.VOID).any():
        raise ValueError("selection references void pixels")
    return labels
