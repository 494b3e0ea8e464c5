"""Segmentation scores computed from a confusion matrix, and baseline comparisons.

Per-class accuracy is reported as recall and per-class IOU as precision.
Classes absent from the ground truth (``t_i == 0``) are left out of every mean.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from .core import ConfusionMatrix
from .errors import EmptyConfusion, ZeroBaseline

SUMMARY_METRICS = ("pix_acc", "mean_acc", "mean_iou", "fw_iou")


@dataclass(frozen=True)
class SegMetrics:
    pix_acc: float
    mean_acc: float
    mean_iou: float
    fw_iou: float
    recall: np.ndarray
    precision_iou: np.ndarray
    names: tuple

    def as_dict(self) -> dict[str, float]:
        """Flat name -> fraction mapping; undefined per-class values are NaN."""
        out = {name: float(getattr(self, name)) for name in SUMMARY_METRICS}
        for name, r in zip(self.names, self.recall):
            out[f"recall_{name}"] = float(r)
        for name, p in zip(self.names, self.precision_iou):
            out[f"precision_iou_{name}"] = float(p)
        return out

    def as_percentages(self) -> dict[str, float]:
        return {k: 100.0 * v for k, v in self.as_dict().items()}


def _subset_indices(cm: ConfusionMatrix, class_subset) -> np.ndarray:
    if class_subset is None:
        return np.arange(cm.n_classes)
    indices = []
    for c in class_subset:
        indices.append(cm.names.index(c) if isinstance(c, str) else int(c))
    indices = np.unique(indices)
    if indices.size == 0 or indices.min() < 0 or indices.max() >= cm.n_classes:
        raise ValueError(f"invalid class subset {class_subset!r}")
    return indices


def compute_metrics(cm: ConfusionMatrix, class_subset: Optional[Iterable] = None) -> SegMetrics:
    """Pixel accuracy, mean accuracy, mean IOU and frequency weighted IOU.

    With ``class_subset`` the sums, means and weights run over those classes
    only, e.g. ``{ClassId.ANCHOR}`` gives anchor recall as ``mean_acc``.
    """
    n = cm.counts.astype(np.float64)
    diag = np.diag(n)
    t = n.sum(axis=1)
    p = n.sum(axis=0)
    union = t + p - diag
    with np.errstate(divide="ignore", invalid="ignore"):
        recall = np.where(t > 0, diag / t, np.nan)
        iou = np.where(union > 0, diag / union, np.nan)

    subset = _subset_indices(cm, class_subset)
    present = subset[t[subset] > 0]
    if present.size == 0:
        raise EmptyConfusion("no ground-truth pixels in the evaluated classes")
    t_sum = t[present].sum()
    return SegMetrics(
        pix_acc=float(diag[present].sum() / t_sum),
        mean_acc=float(recall[present].mean()),
        mean_iou=float(iou[present].mean()),
        fw_iou=float((t[present] * iou[present]).sum() / t_sum),
        recall=recall,
        precision_iou=iou,
        names=cm.names,
    )


# -- comparison against a baseline -----------------------------------------

class Direction(str, enum.Enum):
    INCREASE_BETTER = "increase"
    DECREASE_BETTER = "decrease"


def relative_change(baseline: float, model: float, direction=Direction.INCREASE_BETTER) -> float:
    """Relative improvement of ``model`` over ``baseline`` in percent."""
    if baseline == 0:
        raise ZeroBaseline("relative change against a zero baseline")
    if Direction(direction) is Direction.INCREASE_BETTER:
        return (model - baseline) / baseline * 100.0
    return (baseline - model) / baseline * 100.0


@dataclass(frozen=True)
class ComparisonEntry:
    name: str
    baseline: float
    model: float
    change: float

    @property
    def change_2dp(self) -> float:
        return round(self.change, 2)


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple
    direction: Direction

    def __getitem__(self, name: str) -> ComparisonEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def rows(self) -> list[list[str]]:
        header = "relative_increase" if self.direction is Direction.INCREASE_BETTER else "relative_decrease"
        rows = [["metric", "baseline", "model", header]]
        for e in self.entries:
            rows.append([e.name, f"{e.baseline:.2f}", f"{e.model:.2f}", f"{e.change:.2f}"])
        return rows


Scores = Union[SegMetrics, Mapping[str, float], float]


def _as_scores(values: Scores) -> dict[str, float]:
    if isinstance(values, SegMetrics):
        return values.as_percentages()
    if isinstance(values, Mapping):
        return {k: float(v) for k, v in values.items()}
    return {"value": float(values)}


def compare(baseline: Scores, model: Scores, direction=Direction.INCREASE_BETTER) -> ComparisonReport:
    """Relative change of every entry the two score sets share.

    Plain mappings and scalars are taken as percentages already; SegMetrics
    are converted.  Entries undefined on either side are skipped.
    """
    direction = Direction(direction)
    base, mod = _as_scores(baseline), _as_scores(model)
    entries = []
    for name, b in base.items():
        if name not in mod or np.isnan(b) or np.isnan(mod[name]):
            continue
        if b == 0:
            raise ZeroBaseline(f"baseline value of {name!r} is zero")
        entries.append(ComparisonEntry(name, b, mod[name], relative_change(b, mod[name], direction)))
    return ComparisonReport(tuple(entries), direction)
