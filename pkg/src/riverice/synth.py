"""Synthetic river-surface scenes with exact ground truth.

Scenes are elliptical ice pans of both kinds on open water.  Each class has
its own gray-level band, so with no noise the classes can be told apart by
thresholds alone.  Pans wrap around the frame edges, which keeps every pan's
full area inside the frame and lets sequences drift without pans leaving.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .augment import stream
from .core import ClassId


@dataclass(frozen=True)
class SceneSpec:
    height: int = 512
    width: int = 512
    n_frazil_pans: int = 10
    n_anchor_pans: int = 8
    radius_range: tuple = (15.0, 50.0)
    water_band: tuple = (10, 60)
    anchor_band: tuple = (100, 160)
    frazil_band: tuple = (200, 255)
    noise_std: float = 0.0
    drift: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("scene must be at least 1x1")
        if self.n_frazil_pans < 0 or self.n_anchor_pans < 0:
            raise ValueError("pan counts must be non-negative")
        if self.radius_range[0] < 2 or self.radius_range[0] > self.radius_range[1]:
            raise ValueError("radius range must satisfy 2 <= min <= max")
        bands = sorted([self.water_band, self.anchor_band, self.frazil_band])
        for lo, hi in bands:
            if not 0 <= lo <= hi <= 255:
                raise ValueError("intensity bands must lie in [0, 255]")
        if any(bands[i][1] >= bands[i + 1][0] for i in range(2)):
            raise ValueError("intensity bands must be disjoint")
        if self.noise_std < 0 or self.drift < 0:
            raise ValueError("noise_std and drift must be non-negative")


@dataclass(frozen=True)
class Pan:
    label: int
    row: float
    col: float
    radius_row: float
    radius_col: float
    angle: float
    level: float


def _pans(spec: SceneSpec, rng: np.random.Generator) -> list[Pan]:
    labels = [ClassId.FRAZIL] * spec.n_frazil_pans + [ClassId.ANCHOR] * spec.n_anchor_pans
    labels = [labels[i] for i in rng.permutation(len(labels))]
    bands = {ClassId.FRAZIL: spec.frazil_band, ClassId.ANCHOR: spec.anchor_band}
    pans = []
    for label in labels:
        lo, hi = bands[label]
        pans.append(Pan(
            label=int(label),
            row=rng.uniform(0, spec.height),
            col=rng.uniform(0, spec.width),
            radius_row=rng.uniform(*spec.radius_range),
            radius_col=rng.uniform(*spec.radius_range),
            angle=rng.uniform(0, np.pi),
            level=rng.uniform(lo, hi),
        ))
    return pans


def _wrapped_offset(coord: np.ndarray, centre: float, size: int) -> np.ndarray:
    return (coord - centre + size / 2.0) % size - size / 2.0


def _render(spec: SceneSpec, pans, water_level: float, shift: float, noise_rng):
    rows = np.arange(spec.height, dtype=np.float64)[:, None]
    cols = np.arange(spec.width, dtype=np.float64)[None, :]
    mask = np.full((spec.height, spec.width), ClassId.WATER, dtype=np.uint8)
    gray = np.full((spec.height, spec.width), water_level)
    for pan in pans:
        dy = _wrapped_offset(rows, pan.row, spec.height)
        dx = _wrapped_offset(cols, pan.col + shift, spec.width)
        cos_a, sin_a = np.cos(pan.angle), np.sin(pan.angle)
        u = (dx * cos_a + dy * sin_a) / pan.radius_col
        v = (dy * cos_a - dx * sin_a) / pan.radius_row
        inside = u * u + v * v <= 1.0
        mask[inside] = pan.label
        gray[inside] = pan.level
    image = np.repeat(gray[..., None], 3, axis=2)
    if spec.noise_std > 0:
        image = image + noise_rng.normal(0.0, spec.noise_std, size=image.shape)
    return np.clip(np.rint(image), 0, 255).astype(np.uint8), mask


def generate_scene(spec: SceneSpec, index: int = 0):
    """``(image, mask)`` for scene number ``index`` of the given spec."""
    geometry = stream(spec.seed, index, 0)
    pans = _pans(spec, geometry)
    water = geometry.uniform(*spec.water_band)
    return _render(spec, pans, water, 0.0, stream(spec.seed, index, 1, 0))


def generate_sequence(spec: SceneSpec, n_frames: int, index: int = 0):
    """Frames of one scene whose pans move ``spec.drift`` columns per frame.

    The first frame equals ``generate_scene(spec, index)``.
    """
    if n_frames < 2:
        raise ValueError("a sequence needs at least two frames")
    geometry = stream(spec.seed, index, 0)
    pans = _pans(spec, geometry)
    water = geometry.uniform(*spec.water_band)
    return [_render(spec, pans, water, t * spec.drift, stream(spec.seed, index, 1, t))
            for t in range(n_frames)]
