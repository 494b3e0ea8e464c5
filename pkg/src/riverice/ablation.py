"""Training-set size and labelled-pixel ablations for the baseline classifier."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .augment import AugmentParams, Patch, Policy, augment_image, stream
from .baseline import ModelParams, TrainConfig, predict_tiled, train
from .core import ConfusionMatrix, confusion
from .errors import InsufficientPool
from .metrics import SegMetrics, compute_metrics

IMAGE_COUNTS = (4, 8, 16, 24, 32)
PIXEL_COUNTS = (2, 10, 100, 1000)

_SUBSET_STREAM = 0xAB1A


class LabelledImage(NamedTuple):
    name: str
    image: np.ndarray
    mask: np.ndarray


def _map(func, items, jobs: int):
    if jobs <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def augment_pool(pool: Sequence[LabelledImage], params: AugmentParams, jobs: int = 1) -> list[list[Patch]]:
    """Patches of every image, one list per image in pool order."""
    return _map(lambda item: augment_image(item.image, item.mask, params, item.name), pool, jobs)


def evaluate(params: ModelParams, test_set: Sequence[LabelledImage], patch_size: int,
             jobs: int = 1) -> tuple[ConfusionMatrix, SegMetrics]:
    """Tiled prediction on every test image, scored on the pooled confusion matrix."""
    preds = _map(lambda item: predict_tiled(params, item.image, patch_size), test_set, jobs)
    cm = ConfusionMatrix.zeros()
    for item, pred in zip(test_set, preds):
        cm = cm + confusion(item.mask, pred)
    return cm, compute_metrics(cm)


def train_on_images(pool: Sequence[LabelledImage], config: TrainConfig, augment: AugmentParams,
                    jobs: int = 1) -> ModelParams:
    patches = [p for per_image in augment_pool(pool, augment, jobs) for p in per_image]
    return train(patches, config)


def nested_subsets(pool_size: int, counts: Sequence[int], seed: int) -> dict[int, list[int]]:
    """Pool indices for each count; every subset contains all smaller ones.

    Indices are returned in pool order, so the full-pool subset is the pool.
    """
    bad = [c for c in counts if c < 1 or c > pool_size]
    if bad:
        raise InsufficientPool(f"counts {bad} do not fit a pool of {pool_size} images")
    order = stream(seed, _SUBSET_STREAM).permutation(pool_size)
    return {c: sorted(int(i) for i in order[:c]) for c in counts}


@dataclass(frozen=True)
class AblationRow:
    count: int
    params: ModelParams
    metrics: SegMetrics
    images: tuple

    def record(self) -> dict:
        row = {"count": self.count, "n_images": len(self.images)}
        row.update(self.metrics.as_percentages())
        return row


def ablate_images(train_pool: Sequence[LabelledImage], test_set: Sequence[LabelledImage],
                  counts: Sequence[int] = IMAGE_COUNTS, config: TrainConfig = TrainConfig(),
                  augment: AugmentParams = AugmentParams(), seed: int = 0,
                  jobs: int = 1) -> list[AblationRow]:
    """Train on nested random subsets of the pool, one model per count."""
    subsets = nested_subsets(len(train_pool), counts, seed)
    needed = sorted(set().union(*subsets.values()))
    patches = dict(zip(needed, augment_pool([train_pool[i] for i in needed], augment, jobs)))
    rows = []
    for count in counts:
        chosen = subsets[count]
        params = train([p for i in chosen for p in patches[i]], config)
        _, metrics = evaluate(params, test_set, augment.patch_size, jobs)
        rows.append(AblationRow(count, params, metrics, tuple(train_pool[i].name for i in chosen)))
    return rows


def ablate_pixels(train_pool: Sequence[LabelledImage], test_set: Sequence[LabelledImage],
                  counts: Sequence[int] = PIXEL_COUNTS, config: TrainConfig = TrainConfig(),
                  augment: AugmentParams = AugmentParams(), jobs: int = 1) -> list[AblationRow]:
    """Train with labels from only ``count`` pixels per class in each patch.

    Each patch keeps one fixed labelled subset for the whole run, as if the
    rest of its pixels had never been annotated.
    """
    if any(c < 1 for c in counts):
        raise ValueError("pixel counts must be positive")
    patches = [p for per_image in augment_pool(train_pool, augment, jobs) for p in per_image]
    names = tuple(item.name for item in train_pool)
    rows = []
    for count in counts:
        run = replace(config, n_per_class=count, policy=Policy.TAKE_ALL, resample=False)
        params = train(patches, run)
        _, metrics = evaluate(params, test_set, augment.patch_size, jobs)
        rows.append(AblationRow(count, params, metrics, names))
    return rows
