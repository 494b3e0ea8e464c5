"""Split a frame into non-overlapping K x K tiles and stitch tile predictions back."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import validate_mask
from .errors import LayoutMismatch


@dataclass(frozen=True)
class TileLayout:
    frame_height: int
    frame_width: int
    patch_size: int

    @property
    def padded_height(self) -> int:
        return -(-self.frame_height // self.patch_size) * self.patch_size

    @property
    def padded_width(self) -> int:
        return -(-self.frame_width // self.patch_size) * self.patch_size

    @property
    def grid(self) -> tuple[int, int]:
        return self.padded_height // self.patch_size, self.padded_width // self.patch_size

    @property
    def origins(self) -> list[tuple[int, int]]:
        K = self.patch_size
        rows, cols = self.grid
        return [(r * K, c * K) for r in range(rows) for c in range(cols)]

    def __len__(self) -> int:
        rows, cols = self.grid
        return rows * cols


def tile(image: np.ndarray, patch_size: int) -> tuple[list[np.ndarray], TileLayout]:
    """Reflect-pad ``image`` to a multiple of ``patch_size`` and cut it row-major.

    Works for RGB images and label masks alike.
    """
    image = np.asarray(image)
    if image.ndim < 2 or image.shape[0] < 1 or image.shape[1] < 1:
        raise ValueError("cannot tile an empty frame")
    if patch_size < 1:
        raise ValueError("patch size must be positive")
    layout = TileLayout(image.shape[0], image.shape[1], patch_size)
    pad = [(0, layout.padded_height - image.shape[0]), (0, layout.padded_width - image.shape[1])]
    pad += [(0, 0)] * (image.ndim - 2)
    padded = np.pad(image, pad, mode="reflect") if any(p[1] for p in pad) else image
    K = patch_size
    tiles = [padded[r:r + K, c:c + K] for r, c in layout.origins]
    return tiles, layout


def stitch(patch_masks, layout: TileLayout) -> np.ndarray:
    """Place K x K tile masks at their layout origins and crop to the frame."""
    patch_masks = list(patch_masks)
    if len(patch_masks) != len(layout):
        raise LayoutMismatch(f"expected {len(layout)} tiles, got {len(patch_masks)}")
    K = layout.patch_size
    canvas = np.empty((layout.padded_height, layout.padded_width), dtype=np.uint8)
    for (r, c), patch in zip(layout.origins, patch_masks):
        patch = validate_mask(patch)
        if patch.shape != (K, K):
            raise LayoutMismatch(f"tile at ({r}, {c}) is {patch.shape}, expected {(K, K)}")
        canvas[r:r + K, c:c + K] = patch
    return canvas[:layout.frame_height, :layout.frame_width].copy()
