"""
Patches for training, tiles for inference
=========================================

Training patches come from a sliding window with random strides, run
once on the frame and once per rotation band, with flipped copies of
each window.  Inference instead cuts the frame into a fixed grid of
K x K tiles and stitches the per-tile results back together.
"""

from collections import Counter

import numpy as np

from riverice import AugmentParams, SceneSpec, augment_image, generate_scene, stitch, tile

image, mask = generate_scene(SceneSpec(height=300, width=400, noise_std=6, seed=2))

# %%
# Four rotation bands of equal width between 15 and 345 degrees.

params = AugmentParams(patch_size=128, seed=1)
print(params.bands())

patches = augment_image(image, mask, params, source="scene")
print(len(patches), "patches")
print(Counter("unrotated" if p.angle is None else f"{p.angle:.1f} deg" for p in patches))
print(patches[0].name, patches[1].name, patches[2].name)

# %%
# Every patch is K x K and carries no Void pixels, even the rotated
# ones, because rotations are cropped to the largest inscribed rectangle.

assert all(p.labels.shape == (128, 128) and p.labels.max() < 3 for p in patches)

# %%
# Tiling pads the frame by reflection up to a multiple of K.  Stitching
# the tiles of the mask gives back the mask exactly.

tiles, layout = tile(mask, 128)
print(layout.grid, "grid from a", mask.shape, "frame")
assert np.array_equal(stitch(tiles, layout), mask)
