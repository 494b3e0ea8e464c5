"""Label taxonomy, mask encoding, confusion matrices and class frequencies.

A label mask is a 2-D ``uint8`` array holding :class:`ClassId` values.  Void
marks pixels invalidated by rotation or padding and is never scored.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, EmptyInput, UnknownPixelValue


class ClassId(enum.IntEnum):
    WATER = 0
    ANCHOR = 1
    FRAZIL = 2
    VOID = 3


SCORED = (ClassId.WATER, ClassId.ANCHOR, ClassId.FRAZIL)
N_CLASSES = len(SCORED)
CLASS_NAMES = ("water", "anchor", "frazil")

IMAGE_SUFFIXES = (".png", ".bmp", ".tif", ".tiff")


@dataclass(frozen=True)
class MaskEncoding:
    """Gray level used for each class in 8-bit mask files."""

    water: int = 0
    anchor: int = 128
    frazil: int = 255
    void: int = 64

    def __post_init__(self):
        values = [self.water, self.anchor, self.frazil, self.void]
        if any(not 0 <= v <= 255 for v in values):
            raise ValueError("mask gray levels must lie in [0, 255]")
        if len(set(values)) != 4:
            raise ValueError("mask gray levels must be distinct")

    @classmethod
    def parse(cls, text: str) -> "MaskEncoding":
        """Parse ``"water=0,anchor=128,frazil=255,void=64"`` (any subset)."""
        fields = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            key, _, value = item.partition("=")
            key = key.strip().lower()
            if key not in ("water", "anchor", "frazil", "void") or not value:
                raise ValueError(f"bad encoding item {item!r}")
            fields[key] = int(value)
        return cls(**fields)

    def lut(self) -> np.ndarray:
        """ClassId -> gray level."""
        return np.array([self.water, self.anchor, self.frazil, self.void], dtype=np.uint8)


DEFAULT_ENCODING = MaskEncoding()


def validate_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
        raise ValueError(f"label mask must be a non-empty 2-D grid, got shape {mask.shape}")
    if int(mask.min()) < 0 or int(mask.max()) > ClassId.VOID:
        raise ValueError("label mask holds values outside the class taxonomy")
    return mask.astype(np.uint8, copy=False)


def decode_mask(image, encoding: MaskEncoding = DEFAULT_ENCODING, strict: bool = True) -> np.ndarray:
    """Map an 8-bit gray mask image to class labels.

    Unknown gray levels raise :class:`UnknownPixelValue` (first offender in
    row-major order) when ``strict``; otherwise they decode to Void.
    """
    image = np.asarray(image)
    if image.ndim != 2 or image.size == 0:
        raise ValueError(f"mask image must be a non-empty 2-D grid, got shape {image.shape}")
    table = np.full(256, 255, dtype=np.uint8)
    table[encoding.void] = ClassId.VOID
    table[encoding.water] = ClassId.WATER
    table[encoding.anchor] = ClassId.ANCHOR
    table[encoding.frazil] = ClassId.FRAZIL
    labels = table[image.astype(np.uint8)]
    unknown = labels == 255
    if unknown.any():
        if strict:
            row, col = np.argwhere(unknown)[0]
            raise UnknownPixelValue(image[row, col], row, col)
        labels[unknown] = ClassId.VOID
    return labels


def encode_mask(mask, encoding: MaskEncoding = DEFAULT_ENCODING) -> np.ndarray:
    return encoding.lut()[validate_mask(mask)]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts ``n[i, j]`` of pixels of true class i predicted as class j."""

    counts: np.ndarray
    names: tuple = CLASS_NAMES

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion counts must be a square matrix")
        if (counts < 0).any():
            raise ValueError("confusion counts must be non-negative")
        if len(self.names) != counts.shape[0]:
            raise ValueError("one class name per row is required")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def truth_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def pred_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.names != other.names:
            raise ValueError("cannot add confusion matrices over different classes")
        return ConfusionMatrix(self.counts + other.counts, self.names)

    @classmethod
    def zeros(cls, names: tuple = CLASS_NAMES) -> "ConfusionMatrix":
        return cls(np.zeros((len(names), len(names)), dtype=np.int64), names)

    def collapse_ice(self) -> "ConfusionMatrix":
        """Merge anchor and frazil into a single ice class (water vs ice)."""
        if self.names != CLASS_NAMES:
            raise ValueError("collapse_ice expects the water/anchor/frazil matrix")
        groups = [[0], [1, 2]]
        counts = np.array([[self.counts[np.ix_(g, h)].sum() for h in groups] for g in groups])
        return ConfusionMatrix(counts, ("water", "ice"))


def confusion(gt, pred) -> ConfusionMatrix:
    gt, pred = validate_mask(gt), validate_mask(pred)
    if gt.shape != pred.shape:
        raise DimensionMismatch(f"ground truth {gt.shape} vs prediction {pred.shape}")
    scored = (gt != ClassId.VOID) & (pred != ClassId.VOID)
    index = N_CLASSES * gt[scored].astype(np.int64) + pred[scored]
    counts = np.bincount(index, minlength=N_CLASSES**2).reshape(N_CLASSES, N_CLASSES)
    return ConfusionMatrix(counts)


def class_counts(mask) -> np.ndarray:
    mask = validate_mask(mask)
    return np.bincount(mask.ravel(), minlength=len(ClassId))[:N_CLASSES]


def class_frequencies(masks: Iterable) -> np.ndarray:
    """Fraction of scored pixels belonging to each class, pooled over ``masks``."""
    totals = np.zeros(N_CLASSES, dtype=np.int64)
    for mask in masks:
        totals += class_counts(mask)
    if totals.sum() == 0:
        raise EmptyInput("no scored pixels in the given masks")
    return totals / totals.sum()


# -- file I/O ---------------------------------------------------------------

def list_images(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def read_mask(path, encoding: MaskEncoding = DEFAULT_ENCODING, strict: bool = True) -> np.ndarray:
    with Image.open(path) as im:
        gray = np.asarray(im if im.mode == "L" else im.convert("L"))
    return decode_mask(gray, encoding, strict)


def write_mask(path, mask, encoding: MaskEncoding = DEFAULT_ENCODING) -> None:
    Image.fromarray(encode_mask(mask, encoding)).save(path, format="PNG")


def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB")).copy()


def write_image(path, image) -> None:
    Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).save(path, format="PNG")


def matched_pairs(first_dir, second_dir) -> list[tuple[Path, Path]]:
    """Pair files of two directories by stem; both sides must match exactly."""
    first = {p.stem: p for p in list_images(first_dir)}
    second = {p.stem: p for p in list_images(second_dir)}
    if set(first) != set(second):
        missing = sorted(set(first) ^ set(second))
        raise DimensionMismatch(f"unmatched file names: {', '.join(missing[:5])}")
    if not first:
        raise EmptyInput(f"no images in {first_dir}")
    return [(first[k], second[k]) for k in sorted(first)]
