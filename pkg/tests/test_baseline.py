import math

import numpy as np
import pytest

from riverice.augment import AugmentParams, PixelSelection, Policy, augment_image, sample_class_balanced_pixels
from riverice.baseline import (
    ModelParams, TrainConfig, class_scores, extract_features, features_at, load_params,
    loss_and_grad, pixel_accuracy, predict, predict_tiled, save_params, train,
)
from riverice.core import ClassId
from riverice.errors import EmptySelection, NoTrainableData
from riverice.synth import SceneSpec, generate_scene

from conftest import random_mask


def naive_features(image):
    """Loop-based reference for the 8 per-pixel features."""
    rgb = image.astype(np.float64) / 255.0
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    padded = np.pad(gray, 2, mode="reflect")
    h, w = gray.shape
    out = np.zeros((h, w, 8))
    for r in range(h):
        for c in range(w):
            win = padded[r:r + 5, c:c + 5]
            out[r, c] = [*rgb[r, c], gray[r, c], win.mean(), win.std(), win.min(), win.max()]
    return out


def central_difference(f, weights, h=1e-6):
    grad = np.zeros_like(weights)
    for idx in np.ndindex(weights.shape):
        plus, minus = weights.copy(), weights.copy()
        plus[idx] += h
        minus[idx] -= h
        grad[idx] = (f(plus) - f(minus)) / (2 * h)
    return grad


def random_instance(rng, size=12):
    image = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    labels = random_mask(rng, (size, size))
    features = extract_features(image)
    selection = sample_class_balanced_pixels(labels, 5, Policy.TAKE_ALL, rng)
    weights = rng.normal(0, 1.5, size=(3, 9))
    return weights, features, labels, selection


def max_relative_error(analytic, numeric):
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    significant = scale > 1e-6
    assert np.abs(analytic - numeric)[~significant].max(initial=0) < 1e-10
    return (np.abs(analytic - numeric)[significant] / scale[significant]).max()


class TestFeatures:
    def test_uniform_gray(self):
        f = extract_features(np.full((9, 9, 3), 90, np.uint8))
        gray = 90 / 255
        np.testing.assert_allclose(f[..., 3:5], gray, atol=1e-12)
        np.testing.assert_allclose(f[..., 5], 0, atol=1e-12)
        np.testing.assert_allclose(f[..., 6:8], gray, atol=1e-12)

    def test_white_interior(self):
        f = extract_features(np.full((11, 11, 3), 255, np.uint8))
        np.testing.assert_allclose(f[5, 5], [1, 1, 1, 1, 1, 0, 1, 1], atol=1e-12)

    def test_checkerboard_window_counts(self):
        board = ((np.add.outer(np.arange(12), np.arange(12)) % 2 == 0) * 255).astype(np.uint8)
        f = extract_features(np.repeat(board[..., None], 3, axis=2))
        # 5x5 window: 13 cells share the centre's parity, 12 do not
        assert f[6, 6, 4] == pytest.approx(13 / 25)
        assert f[6, 7, 4] == pytest.approx(12 / 25)
        assert f[6, 6, 5] == pytest.approx(math.sqrt(13 / 25 * 12 / 25))
        assert (f[6, 6, 6], f[6, 6, 7]) == (0.0, pytest.approx(1.0))

    def test_matches_loop_reference(self, rng):
        image = rng.integers(0, 256, (13, 17, 3), dtype=np.uint8)
        np.testing.assert_allclose(extract_features(image), naive_features(image), atol=1e-12)

    def test_pointwise_equals_grid(self, rng):
        image = rng.integers(0, 256, (20, 30, 3), dtype=np.uint8)
        rows, cols = rng.integers(0, 20, 50), rng.integers(0, 30, 50)
        np.testing.assert_array_equal(features_at(image, rows, cols), extract_features(image)[rows, cols])

    def test_invariants(self, rng):
        f = extract_features(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
        assert np.isfinite(f).all() and (f[..., 5] >= 0).all()
        assert (f[..., 6] <= f[..., 3]).all() and (f[..., 3] <= f[..., 7]).all()


class TestLoss:
    def test_zero_weights_give_log3(self, rng):
        _, features, labels, selection = random_instance(rng)
        loss, _ = loss_and_grad(np.zeros((3, 9)), features, labels, selection)
        assert abs(loss - math.log(3)) <= 1e-9

    def test_gradient_check(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(20):
            weights, features, labels, selection = random_instance(rng)
            _, grad = loss_and_grad(weights, features, labels, selection, l2=1e-2)
            numeric = central_difference(
                lambda w: loss_and_grad(w, features, labels, selection, l2=1e-2)[0], weights)
            worst = max(worst, max_relative_error(grad, numeric))
        assert worst <= 1e-5

    def test_unselected_labels_unused(self, rng):
        weights, features, labels, selection = random_instance(rng)
        keep = np.zeros(labels.shape, bool)
        keep[selection.rows, selection.cols] = True
        perturbed = labels.copy()
        perturbed[~keep] = (perturbed[~keep] + 1) % 3
        a = loss_and_grad(weights, features, labels, selection)
        b = loss_and_grad(weights, features, perturbed, selection)
        assert a[0] == b[0] and np.array_equal(a[1], b[1])

    def test_empty_selection(self, rng):
        _, features, labels, _ = random_instance(rng)
        empty = PixelSelection(np.array([], int), np.array([], int), np.array([], int))
        with pytest.raises(EmptySelection):
            loss_and_grad(np.zeros((3, 9)), features, labels, empty)

    def test_softmax_sums_to_one(self, rng):
        probs = class_scores(rng.normal(0, 3, (3, 9)), rng.integers(0, 256, (10, 10, 3), dtype=np.uint8))
        assert np.abs(probs.sum(axis=2) - 1).max() <= 1e-12


def scene_patches(noise_std=0.0, size=96, patch_size=48, seed=3, n=2):
    spec = SceneSpec(height=size, width=size, n_frazil_pans=4, n_anchor_pans=4,
                     radius_range=(6.0, 16.0), noise_std=noise_std, seed=seed)
    scenes = [generate_scene(spec, i) for i in range(n)]
    params = AugmentParams(patch_size=patch_size, stride_frac_min=0.4, seed=seed)
    patches = [p for i, (img, m) in enumerate(scenes) for p in augment_image(img, m, params, f"s{i}")]
    return scenes, patches


class TestTrain:
    def test_zero_epochs(self):
        _, patches = scene_patches()
        params = train(patches, TrainConfig(epochs=0))
        assert not params.weights.any()

    def test_deterministic(self):
        _, patches = scene_patches()
        config = TrainConfig(epochs=3, n_per_class=20, batch_size=256, seed=11)
        a, b = train(patches, config), train(patches, config)
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.loss_history == b.loss_history and len(a.loss_history) == 3
        assert train(patches, TrainConfig(epochs=3, n_per_class=20, batch_size=256, seed=12)).weights.tobytes() != a.weights.tobytes()

    def test_separable_scenes(self):
        scenes, patches = scene_patches(noise_std=0.0)
        params = train(patches, TrainConfig(epochs=15, n_per_class=30, learning_rate=1.0, batch_size=512))
        for image, mask in scenes:
            assert pixel_accuracy(params, image, mask) >= 0.99

    def test_full_batch_loss_non_increasing(self):
        _, patches = scene_patches(n=1)
        config = TrainConfig(epochs=25, learning_rate=1e-3, batch_size=10**9, n_per_class=10,
                             policy=Policy.TAKE_ALL, resample=False)
        history = train(patches, config).loss_history
        assert all(b <= a for a, b in zip(history, history[1:]))
        assert history[-1] < history[0]

    def test_everything_discarded(self):
        _, patches = scene_patches()
        with pytest.raises(NoTrainableData):
            train(patches, TrainConfig(epochs=1, n_per_class=10**6))

    def test_config_text(self, tmp_path):
        config = TrainConfig(learning_rate=0.5, epochs=7, policy="take_all", resample=False)
        path = tmp_path / "train.cfg"
        path.write_text("# comment\n" + config.to_text(), encoding="utf-8")
        assert TrainConfig.from_file(path) == config
        with pytest.raises(ValueError):
            TrainConfig.from_text("epochs = 3\nmomentum = 0.9\n")
        with pytest.raises(ValueError):
            TrainConfig.from_text("resample = maybe\n")


class TestPredict:
    def test_zero_weights_predict_water(self, rng):
        image = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        assert (predict(ModelParams(), image) == ClassId.WATER).all()

    def test_frazil_bias(self, rng):
        weights = np.zeros((3, 9))
        weights[ClassId.FRAZIL, -1] = 50.0
        assert (predict(weights, rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)) == ClassId.FRAZIL).all()

    def test_shift_invariance(self, rng):
        weights = rng.normal(0, 2, (3, 9))
        image = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        shifted = weights + rng.normal(0, 5, (1, 9))
        np.testing.assert_array_equal(predict(weights, image), predict(shifted, image))

    def test_tiled_prediction_matches_per_tile(self, rng):
        weights = rng.normal(0, 2, (3, 9))
        image = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
        out = predict_tiled(weights, image, 20)
        np.testing.assert_array_equal(out[:20, 20:], predict(weights, image[:20, 20:]))

    def test_params_file(self, tmp_path, rng):
        params = ModelParams(rng.normal(size=(3, 9)))
        save_params(tmp_path / "m.istb", params)
        data = (tmp_path / "m.istb").read_bytes()
        assert data[:5] == b"ISTB1" and len(data) == 5 + 27 * 8
        assert np.frombuffer(data[5:13], "<f8")[0] == params.weights[0, 0]
        assert load_params(tmp_path / "m.istb").weights.tobytes() == params.weights.tobytes()
        (tmp_path / "bad").write_bytes(b"nope")
        with pytest.raises(ValueError):
            load_params(tmp_path / "bad")
