"""Column-wise ice concentration, per-frame MAE and video consistency."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import ClassId, validate_mask
from .errors import EmptyInput, LengthMismatch, TooFewFrames, WidthMismatch


class ClassSet(str, enum.Enum):
    COMBINED = "combined"
    ANCHOR = "anchor"
    FRAZIL = "frazil"

    @property
    def members(self) -> tuple[int, ...]:
        return {
            ClassSet.COMBINED: (ClassId.ANCHOR, ClassId.FRAZIL),
            ClassSet.ANCHOR: (ClassId.ANCHOR,),
            ClassSet.FRAZIL: (ClassId.FRAZIL,),
        }[self]


ALL_CLASS_SETS = tuple(ClassSet)


@dataclass(frozen=True)
class ConcentrationVector:
    values: np.ndarray
    class_set: ClassSet
    empty_columns: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.values)


def conc_vector(mask, class_set=ClassSet.COMBINED) -> ConcentrationVector:
    """Fraction of non-void pixels in each column whose label is in ``class_set``.

    All-void columns get 0 and are flagged in ``empty_columns``.
    """
    mask = validate_mask(mask)
    class_set = ClassSet(class_set)
    scored = (mask != ClassId.VOID).sum(axis=0)
    hits = np.isin(mask, class_set.members).sum(axis=0)
    empty = scored == 0
    values = np.divide(hits, scored, out=np.zeros(mask.shape[1]), where=~empty)
    return ConcentrationVector(values, class_set, empty)


def _values(vec) -> np.ndarray:
    return vec.values if isinstance(vec, ConcentrationVector) else np.asarray(vec, dtype=np.float64)


def frame_mae(gt_vec, pred_vec) -> float:
    """Mean absolute concentration difference in percentage points."""
    if isinstance(gt_vec, ConcentrationVector) and isinstance(pred_vec, ConcentrationVector):
        if gt_vec.class_set != pred_vec.class_set:
            raise ValueError("concentration vectors cover different class sets")
    gt, pred = _values(gt_vec), _values(pred_vec)
    if gt.shape != pred.shape:
        raise LengthMismatch(f"vector lengths {gt.shape} and {pred.shape} differ")
    if gt.size == 0:
        raise EmptyInput("empty concentration vectors")
    return float(100.0 * np.abs(gt - pred).mean())


def median_mae(frame_maes: Iterable[float]) -> float:
    """Median of per-frame MAE values; the lower middle element for even counts."""
    values = np.sort(np.asarray(list(frame_maes), dtype=np.float64))
    if values.size == 0:
        raise EmptyInput("no MAE values to summarise")
    return float(values[(values.size - 1) // 2])


@dataclass(frozen=True)
class VideoConsistency:
    """Mean concentration difference between consecutive frames, per class set."""

    mean_difference: dict
    pair_differences: dict = field(repr=False)

    def __getitem__(self, class_set) -> float:
        return self.mean_difference[ClassSet(class_set)]


def temporal_consistency(masks: Sequence, class_sets=ALL_CLASS_SETS) -> VideoConsistency:
    masks = [validate_mask(m) for m in masks]
    if len(masks) < 2:
        raise TooFewFrames("need at least two frames")
    widths = {m.shape[1] for m in masks}
    if len(widths) != 1:
        raise WidthMismatch(f"frame widths differ: {sorted(widths)}")
    means, pairs = {}, {}
    for class_set in map(ClassSet, class_sets):
        vectors = np.stack([conc_vector(m, class_set).values for m in masks])
        diffs = 100.0 * np.abs(np.diff(vectors, axis=0)).mean(axis=1)
        pairs[class_set] = diffs
        means[class_set] = float(diffs.mean())
    return VideoConsistency(means, pairs)
