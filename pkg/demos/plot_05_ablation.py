"""
How much data does the baseline need?
=====================================

Two ablations: train on nested subsets of the training images, or
label only a handful of pixels per class in every patch.
"""

from riverice import AugmentParams, SceneSpec, TrainConfig, generate_scene
from riverice.ablation import LabelledImage, ablate_images, ablate_pixels

spec = SceneSpec(height=96, width=96, n_frazil_pans=4, n_anchor_pans=4,
                 radius_range=(6, 16), noise_std=8, seed=5)
pool = [LabelledImage(f"img{i:02d}", *generate_scene(spec, i)) for i in range(8)]
test = [LabelledImage(f"test{i}", *generate_scene(spec, 100 + i)) for i in range(2)]

config = TrainConfig(epochs=3, n_per_class=50, learning_rate=0.5, batch_size=2048)
augment = AugmentParams(patch_size=48, stride_frac_min=0.4, rotation_bands=1)

# %%
# Each subset contains the smaller ones, so the curves are comparable.

for row in ablate_images(pool, test, counts=(2, 4, 8), config=config, augment=augment):
    print(f"{row.count} images: mean IOU {100 * row.metrics.mean_iou:.2f}  {', '.join(row.images)}")

# %%
# Selective labelling: each patch keeps the same few labelled pixels
# for the whole run.

for row in ablate_pixels(pool, test, counts=(2, 10, 100), config=config, augment=augment):
    print(f"{row.count:4d} px/class: mean IOU {100 * row.metrics.mean_iou:.2f}")
