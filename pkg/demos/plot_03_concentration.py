"""
Ice concentration and video consistency
=======================================

Surface ice concentration is measured per image column.  Comparing the
column profiles of a prediction and its ground truth gives an error in
percentage points; comparing consecutive frames of a video gives a
label-free stability measure.
"""

import numpy as np

from riverice import (
    ClassSet, SceneSpec, conc_vector, frame_mae, generate_scene, generate_sequence,
    median_mae, temporal_consistency,
)

spec = SceneSpec(height=256, width=256, radius_range=(10, 30), seed=4)
_, mask = generate_scene(spec)

# %%
# Column concentration of all ice and of each ice type.

for class_set in ClassSet:
    print(class_set.value, conc_vector(mask, class_set).values[:6].round(3))

# %%
# A prediction that misses the ice in the left quarter of the frame.

pred = mask.copy()
pred[:, :64] = 0
maes = [frame_mae(conc_vector(mask, c), conc_vector(pred, c)) for c in ClassSet]
print("MAE per class set:", np.round(maes, 2))
print("median over three frames:", median_mae([maes[0], 0.0, 2 * maes[0]]))

# %%
# Pans that drift faster make consecutive frames differ more.

for drift in (0.0, 1.0, 20.0):
    frames = generate_sequence(SceneSpec(height=256, width=256, drift=drift, seed=4), 5)
    result = temporal_consistency([m for _, m in frames])
    print(f"drift {drift:4.1f}: combined {result[ClassSet.COMBINED]:.2f}")
