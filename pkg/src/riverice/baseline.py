"""Per-pixel softmax regression on hand-made local features.

A light stand-in for a segmentation network: it trains on exactly the pixels
a :class:`~riverice.augment.PixelSelection` exposes, which is all the pixel
sampling and selective-labelling machinery needs to be exercised end to end.

Parameter files hold the magic ``ISTB1`` followed by the 3 x 9 weight matrix
as row-major little-endian float64 (8 feature weights then the bias per class).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .augment import Patch, PixelSelection, Policy, sample_class_balanced_pixels
from .core import N_CLASSES, ClassId, validate_mask
from .errors import EmptySelection, NoTrainableData
from .tiling import stitch, tile

log = logging.getLogger(__name__)

FEATURE_NAMES = ("red", "green", "blue", "gray", "local_mean", "local_std", "local_min", "local_max")
N_FEATURES = len(FEATURE_NAMES)
WINDOW = 5
PARAMS_MAGIC = b"ISTB1"

_LUMA = np.array([0.299, 0.587, 0.114])
_OFFSETS = np.arange(WINDOW) - WINDOW // 2
_CHUNK = 1 << 16


def _reflect(index: np.ndarray, n: int) -> np.ndarray:
    # mirror about the edge pixels (no edge repeat), like np.pad(mode="reflect")
    if n == 1:
        return np.zeros_like(index)
    period = 2 * (n - 1)
    index = np.mod(index, period)
    return np.where(index > n - 1, period - index, index)


def _as_rgb(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim == 2:
        image = np.repeat(image[..., None], 3, axis=2)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an RGB image, got shape {image.shape}")
    return image


def features_at(image: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Feature vectors (n, 8) of the given pixels.

    Window statistics use a 5 x 5 grayscale neighbourhood reflected at the
    image border, so a pixel's features depend only on the image it lies in.
    """
    image = _as_rgb(image)
    height, width = image.shape[:2]
    rows, cols = np.asarray(rows), np.asarray(cols)
    win_r = _reflect(rows[:, None, None] + _OFFSETS[None, :, None], height)
    win_c = _reflect(cols[:, None, None] + _OFFSETS[None, None, :], width)
    pixels = image[win_r, win_c]
    window = (_LUMA[0] * pixels[..., 0] + _LUMA[1] * pixels[..., 1] + _LUMA[2] * pixels[..., 2]) / 255.0
    window = np.clip(window.reshape(len(rows), WINDOW * WINDOW), 0.0, 1.0)
    out = np.empty((len(rows), N_FEATURES))
    out[:, :3] = image[rows, cols] / 255.0
    out[:, 3] = window[:, WINDOW * WINDOW // 2]
    out[:, 4] = window.mean(axis=1)
    out[:, 5] = window.std(axis=1)
    out[:, 6] = window.min(axis=1)
    out[:, 7] = window.max(axis=1)
    return out


def extract_features(image: np.ndarray) -> np.ndarray:
    """Per-pixel feature grid of shape (H, W, 8)."""
    image = _as_rgb(image)
    height, width = image.shape[:2]
    flat = np.arange(height * width)
    out = np.empty((height * width, N_FEATURES))
    for start in range(0, flat.size, _CHUNK):
        rows, cols = np.divmod(flat[start:start + _CHUNK], width)
        out[start:start + _CHUNK] = features_at(image, rows, cols)
    return out.reshape(height, width, N_FEATURES)


def _design(features: np.ndarray) -> np.ndarray:
    return np.concatenate([features, np.ones((len(features), 1))], axis=1)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


@dataclass
class ModelParams:
    weights: np.ndarray = field(default_factory=lambda: np.zeros((N_CLASSES, N_FEATURES + 1)))
    loss_history: list = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64)
        if self.weights.shape != (N_CLASSES, N_FEATURES + 1):
            raise ValueError(f"weights must be {N_CLASSES}x{N_FEATURES + 1}")
        if not np.isfinite(self.weights).all():
            raise ValueError("weights must be finite")


def save_params(path, params: ModelParams) -> None:
    Path(path).write_bytes(PARAMS_MAGIC + params.weights.astype("<f8").tobytes(order="C"))


def load_params(path) -> ModelParams:
    data = Path(path).read_bytes()
    size = N_CLASSES * (N_FEATURES + 1) * 8
    if data[:len(PARAMS_MAGIC)] != PARAMS_MAGIC or len(data) != len(PARAMS_MAGIC) + size:
        raise ValueError(f"{path} is not a parameter file")
    weights = np.frombuffer(data[len(PARAMS_MAGIC):], dtype="<f8").reshape(N_CLASSES, N_FEATURES + 1)
    return ModelParams(weights.astype(np.float64))


def _weights(params) -> np.ndarray:
    return params.weights if isinstance(params, ModelParams) else np.asarray(params, dtype=np.float64)


def rows_loss_and_grad(weights: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float = 1e-4):
    """Mean softmax cross-entropy of rows ``X`` (n, 8) with labels ``y`` plus L2 on non-bias weights."""
    if len(y) == 0:
        raise EmptySelection("no pixels to compute a loss on")
    design = _design(X)
    logits = design @ weights.T
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_prob = shifted[np.arange(len(y)), y] - log_norm
    decay = weights[:, :N_FEATURES]
    loss = -log_prob.mean() + 0.5 * l2 * np.sum(decay * decay)

    resid = softmax(logits)
    resid[np.arange(len(y)), y] -= 1.0
    grad = resid.T @ design / len(y)
    grad[:, :N_FEATURES] += l2 * decay
    return float(loss), grad


def loss_and_grad(params, features: np.ndarray, labels, selection: PixelSelection, l2: float = 1e-4):
    """Loss and exact gradient using only the labels of ``selection``."""
    if selection is None or len(selection) == 0:
        raise EmptySelection("pixel selection is empty")
    y = np.asarray(labels)[selection.rows, selection.cols].astype(np.int64)
    if (y == ClassId.VOID).any():
        raise ValueError("selection references void pixels")
    X = np.asarray(features)[selection.rows, selection.cols]
    return rows_loss_and_grad(_weights(params), X, y, l2)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 4096
    n_per_class: int = 10_000
    policy: Policy = Policy.DISCARD
    resample: bool = True
    seed: int = 0
    l2: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        if self.learning_rate <= 0 or self.batch_size < 1 or self.n_per_class < 1:
            raise ValueError("learning_rate, batch_size and n_per_class must be positive")
        if self.epochs < 0 or self.seed < 0 or self.l2 < 0:
            raise ValueError("epochs, seed and l2 must be non-negative")

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (s.strip() for s in line.partition("="))
            if not sep or key not in types:
                raise ValueError(f"line {lineno}: unknown setting {line!r}")
            values[key] = _parse_value(types[key], value)
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {value.value if isinstance(value, Policy) else value}")
        return "\n".join(lines) + "\n"


def _parse_value(kind: str, value: str):
    if kind == "bool":
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {value!r}")
        return value.lower() in ("true", "1", "yes")
    if kind == "int":
        return int(value.replace("_", ""))
    if kind == "float":
        return float(value)
    return value


def _selected_rows(patches: Sequence[Patch], config: TrainConfig, rng: np.random.Generator):
    blocks, labels = [], []
    for patch in patches:
        selection = sample_class_balanced_pixels(patch.labels, config.n_per_class, config.policy, rng)
        if selection is None or len(selection) == 0:
            continue
        blocks.append(features_at(patch.image, selection.rows, selection.cols))
        labels.append(selection.classes)
    if not blocks:
        raise NoTrainableData("every training patch was discarded by the pixel selection policy")
    return np.concatenate(blocks), np.concatenate(labels)


def train(patches: Sequence[Patch], config: TrainConfig = TrainConfig()) -> ModelParams:
    """Minibatch gradient descent from zero weights.

    Every epoch draws a fresh pixel selection per patch (unless
    ``config.resample`` is off), shuffles the selected pixels and takes one
    step per minibatch.  The mean minibatch loss of each epoch is logged and
    kept in ``loss_history``.
    """
    params = ModelParams()
    if config.epochs == 0:
        return params
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    weights = params.weights
    X = y = None
    for epoch in range(config.epochs):
        if X is None or config.resample:
            X, y = _selected_rows(patches, config, rng)
        order = rng.permutation(len(y))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grad = rows_loss_and_grad(weights, X[batch], y[batch], config.l2)
            weights -= config.learning_rate * grad
            losses.append(loss)
        params.loss_history.append(float(np.mean(losses)))
        log.info("epoch %d/%d: %d pixels, loss %.6f", epoch + 1, config.epochs, len(y), params.loss_history[-1])
    return params


def class_scores(params, image: np.ndarray) -> np.ndarray:
    """Softmax class probabilities, shape (H, W, 3)."""
    features = extract_features(image)
    logits = _design(features.reshape(-1, N_FEATURES)) @ _weights(params).T
    return softmax(logits).reshape(features.shape[:2] + (N_CLASSES,))


def predict(params, image: np.ndarray) -> np.ndarray:
    """Per-pixel argmax label; ties go to the lower class id."""
    features = extract_features(image)
    logits = _design(features.reshape(-1, N_FEATURES)) @ _weights(params).T
    return np.argmax(logits, axis=1).astype(np.uint8).reshape(features.shape[:2])


def predict_tiled(params, image: np.ndarray, patch_size: int) -> np.ndarray:
    """Predict every K x K tile on its own and stitch the results."""
    tiles, layout = tile(image, patch_size)
    return stitch([predict(params, t) for t in tiles], layout)


def pixel_accuracy(params, image: np.ndarray, mask) -> float:
    mask = validate_mask(mask)
    scored = mask != ClassId.VOID
    return float((predict(params, image)[scored] == mask[scored]).mean())
