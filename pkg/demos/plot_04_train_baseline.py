"""
Training the per-pixel baseline
===============================

A softmax regression over eight local colour and texture features,
trained on class-balanced pixel samples drawn from augmented patches.
It is small enough to train in seconds and good enough to exercise the
whole train, predict and evaluate loop.
"""

import logging

from riverice import (
    AugmentParams, ConfusionMatrix, SceneSpec, TrainConfig, augment_image, compute_metrics,
    confusion, generate_scene, predict_tiled, train,
)

logging.basicConfig(level=logging.INFO, format="%(message)s")

spec = SceneSpec(height=192, width=192, radius_range=(8, 24), noise_std=8, seed=3)
train_set = [generate_scene(spec, i) for i in range(6)]
test_set = [generate_scene(spec, i) for i in range(100, 102)]

# %%
# Patches of 96 pixels.  Patches with fewer than 50 pixels of any class
# are skipped in an epoch; the others give 50 random pixels per class.

params = AugmentParams(patch_size=96, seed=3)
patches = [p for i, (img, m) in enumerate(train_set) for p in augment_image(img, m, params, f"s{i}")]
config = TrainConfig(epochs=5, n_per_class=50, learning_rate=0.5, batch_size=2048)
model = train(patches, config)

# %%
# Predict tile by tile and score the pooled confusion matrix.

cm = ConfusionMatrix.zeros()
for image, mask in test_set:
    cm = cm + confusion(mask, predict_tiled(model, image, 96))
for key, value in compute_metrics(cm).as_percentages().items():
    print(f"{key:>22s} {value:6.2f}")
