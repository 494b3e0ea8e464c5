"""
Scoring a segmentation with a confusion matrix
==============================================

Every score in riverice comes from one 3 x 3 confusion matrix of
water, anchor ice and frazil ice.  Here we build one from a toy
prediction and read the scores off it.
"""

import numpy as np

from riverice import ClassId, compare, compute_metrics, confusion

# %%
# A tiny ground truth and a prediction that confuses some anchor ice
# with frazil ice.  Label 3 is Void and is ignored everywhere.

gt = np.array([[0, 0, 1, 1],
               [0, 2, 2, 1],
               [0, 0, 2, 3]], dtype=np.uint8)
pred = np.array([[0, 0, 1, 2],
                 [0, 2, 2, 1],
                 [0, 1, 2, 0]], dtype=np.uint8)

cm = confusion(gt, pred)
print(cm.counts)

# %%
# Pixel accuracy, mean accuracy, mean IOU and frequency weighted IOU,
# plus per-class recall and IOU.

scores = compute_metrics(cm)
for name, value in scores.as_percentages().items():
    print(f"{name:>22s} {value:6.2f}")

# %%
# Collapsing both ice types into one class gives the ice-vs-water view.

print(compute_metrics(cm.collapse_ice()).as_percentages()["mean_iou"])

# %%
# Relative change of a model over a baseline.  For errors, lower is
# better, so ask for a relative decrease.

print(compare({"recall_anchor": 61.54}, {"recall_anchor": 82.31})["recall_anchor"].change_2dp)
print(compare({"mae": 8.37}, {"mae": 4.71}, "decrease")["mae"].change_2dp)
assert ClassId.VOID not in np.unique(pred)
