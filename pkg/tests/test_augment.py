import hashlib
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riverice.augment import (
    AugmentParams, Policy, augment_image, flip_patch, inscribed_size, plan_windows,
    rotate_and_crop, rotation_bands, sample_class_balanced_pixels, stride_bounds,
)
from riverice.core import ClassId
from riverice.errors import DegenerateCrop, PatchTooLarge

from conftest import random_mask


def smooth_image(h, w):
    y, x = np.mgrid[0:h, 0:w]
    r = (x * 255 // max(w - 1, 1)).astype(np.uint8)
    g = (y * 255 // max(h - 1, 1)).astype(np.uint8)
    b = ((x + y) * 127 // max(h + w - 2, 1)).astype(np.uint8)
    return np.stack([r, g, b], axis=2)


def crop_fits(height, width, out_h, out_w, angle):
    """True when the centred out_h x out_w rectangle, rotated back, lies inside the frame."""
    t = math.radians(angle)
    for sy in (-1, 1):
        for sx in (-1, 1):
            x, y = sx * out_w / 2, sy * out_h / 2
            u = math.cos(t) * x - math.sin(t) * y
            v = math.sin(t) * x + math.cos(t) * y
            if abs(u) > width / 2 + 1e-9 or abs(v) > height / 2 + 1e-9:
                return False
    return True


def patch_digest(patches):
    h = hashlib.sha256()
    for p in patches:
        h.update(p.name.encode())
        h.update(np.ascontiguousarray(p.image).tobytes())
        h.update(np.ascontiguousarray(p.labels).tobytes())
    return h.hexdigest()


class TestPlanWindows:
    def test_fixed_stride_step_and_clamp(self):
        origins = plan_windows(100, 100, 50, (0.4, 0.4), rng=3)
        assert sorted({c for _, c in origins}) == [0, 20, 40, 50]
        assert sorted({r for r, _ in origins}) == [0, 20, 40, 50]
        assert len(origins) == 16

    def test_exact_fit(self):
        assert plan_windows(64, 64, 64, rng=0) == [(0, 0)]

    def test_deterministic(self):
        assert plan_windows(700, 900, 128, rng=42) == plan_windows(700, 900, 128, rng=42)
        assert plan_windows(700, 900, 128, rng=42) != plan_windows(700, 900, 128, rng=43)

    def test_too_large(self):
        with pytest.raises(PatchTooLarge):
            plan_windows(100, 60, 64)

    def test_stride_bounds(self):
        assert stride_bounds(250, (0.1, 0.4)) == (25, 100)
        assert stride_bounds(640, (0.1, 0.4)) == (64, 256)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(32, 400), st.integers(32, 400), st.integers(32, 200), st.integers(0, 2**32))
    def test_origins_in_range_and_steps_bounded(self, h, w, k, seed):
        if k > h or k > w:
            return
        origins = plan_windows(h, w, k, (0.1, 0.4), rng=seed)
        assert len(set(origins)) == len(origins)
        assert all(0 <= r <= h - k and 0 <= c <= w - k for r, c in origins)
        lo, hi = stride_bounds(k, (0.1, 0.4))
        for axis, length in ((0, h), (1, w)):
            values = sorted({o[axis] for o in origins})
            assert values[0] == 0 and values[-1] == length - k
            steps = np.diff(values)
            if len(steps) > 1:
                assert (steps[:-1] >= lo).all() and (steps[:-1] <= hi).all()
            assert (steps <= hi).all()


class TestRotation:
    def test_180_keeps_full_frame(self, rng):
        image = rng.integers(0, 256, (37, 52, 3), dtype=np.uint8)
        mask = random_mask(rng, (37, 52))
        out_image, out_mask = rotate_and_crop(image, mask, 180)
        np.testing.assert_array_equal(out_image, image[::-1, ::-1])
        np.testing.assert_array_equal(out_mask, mask[::-1, ::-1])

    def test_45_degrees_on_square(self, rng):
        image = rng.integers(0, 256, (100, 100, 3), dtype=np.uint8)
        out_image, out_mask = rotate_and_crop(image, random_mask(rng, (100, 100)), 45)
        assert out_image.shape == (70, 70, 3) and out_mask.shape == (70, 70)
        assert crop_fits(100, 100, 70, 70, 45) and not crop_fits(100, 100, 71, 71, 45)

    def test_nearest_neighbour_keeps_label_set(self, rng):
        mask = random_mask(rng, (80, 120))
        _, out = rotate_and_crop(np.zeros((80, 120, 3), np.uint8), mask, 33.3)
        assert set(np.unique(out)) <= {ClassId.WATER, ClassId.ANCHOR, ClassId.FRAZIL}

    def test_general_path_matches_quarter_turn(self):
        image = smooth_image(64, 64)
        mask = np.zeros((64, 64), np.uint8)
        exact, _ = rotate_and_crop(image, mask, 90)
        near, _ = rotate_and_crop(image, mask, 90 + 1e-6)
        assert near.shape == (63, 63, 3)
        # the one-pixel-smaller crop is centred half a pixel inside the exact grid
        e = exact.astype(float)
        expected = (e[:-1, :-1] + e[1:, :-1] + e[:-1, 1:] + e[1:, 1:]) / 4
        assert np.abs(near - expected).max() <= 1.0

    def test_counterclockwise(self):
        mask = np.zeros((30, 30), np.uint8)
        mask[:, -5:] = ClassId.FRAZIL                  # right edge
        _, out = rotate_and_crop(np.zeros((30, 30, 3), np.uint8), mask, 90)
        assert (out[:5] == ClassId.FRAZIL).all()       # moves to the top

    @settings(max_examples=80, deadline=None)
    @given(st.integers(8, 300), st.integers(8, 300), st.floats(0.5, 359.5))
    def test_inscribed_rectangle_fits(self, h, w, angle):
        out_h, out_w = inscribed_size(h, w, angle)
        if out_h >= 1 and out_w >= 1:
            assert crop_fits(h, w, out_h, out_w, angle)

    def test_degenerate(self):
        with pytest.raises(DegenerateCrop):
            rotate_and_crop(np.zeros((1, 200, 3), np.uint8), np.zeros((1, 200), np.uint8), 45)


class TestBands:
    def test_default_bands(self):
        assert rotation_bands() == [(15, 97.5), (97.5, 180), (180, 262.5), (262.5, 345)]
        assert AugmentParams().bands() == rotation_bands()


class TestAugmentImage:
    @pytest.fixture
    def scene(self, rng):
        return smooth_image(160, 200), random_mask(rng, (160, 200))

    def test_flip_expansion(self, scene):
        params = AugmentParams(patch_size=64, seed=5)
        with_flips = augment_image(*scene, params, "s")
        without = augment_image(*scene, AugmentParams(patch_size=64, seed=5, flips=False), "s")
        assert len(with_flips) == 3 * len(without)
        assert [p.flip for p in with_flips[:3]] == ["none", "horizontal", "vertical"]

    def test_contracts(self, scene):
        params = AugmentParams(patch_size=64, seed=5)
        patches = augment_image(*scene, params, "s")
        bands = params.bands()
        assert all(p.image.shape == (64, 64, 3) and p.labels.shape == (64, 64) for p in patches)
        assert all((p.labels != ClassId.VOID).all() for p in patches)
        angles = sorted({p.angle for p in patches if p.angle is not None})
        assert len(angles) == 4
        for angle, (lo, hi) in zip(angles, bands):
            assert lo <= angle < hi
        assert any(p.angle is None for p in patches)

    def test_deterministic(self, scene):
        params = AugmentParams(patch_size=64, seed=9)
        assert patch_digest(augment_image(*scene, params, "s")) == patch_digest(augment_image(*scene, params, "s"))
        assert patch_digest(augment_image(*scene, params, "s")) != patch_digest(augment_image(*scene, params, "t"))

    def test_flip_involution(self, scene):
        for p in augment_image(*scene, AugmentParams(patch_size=64, seed=1), "s")[:30]:
            for flip in ("horizontal", "vertical"):
                np.testing.assert_array_equal(flip_patch(flip_patch(p.image, flip), flip), p.image)
                np.testing.assert_array_equal(flip_patch(flip_patch(p.labels, flip), flip), p.labels)

    def test_flipped_patch_mirrors_base(self, scene):
        base, h, v = augment_image(*scene, AugmentParams(patch_size=64), "s")[:3]
        np.testing.assert_array_equal(h.image, base.image[:, ::-1])
        np.testing.assert_array_equal(v.labels, base.labels[::-1])

    def test_unrotated_windows_cut_the_source(self, scene):
        image, mask = scene
        for p in augment_image(image, mask, AugmentParams(patch_size=64), "s"):
            if p.angle is None and p.flip == "none":
                np.testing.assert_array_equal(p.image, image[p.row:p.row + 64, p.col:p.col + 64])

    def test_small_rotations_skipped(self, rng):
        image, mask = smooth_image(64, 64), random_mask(rng, (64, 64))
        patches = augment_image(image, mask, AugmentParams(patch_size=60), "s")
        assert patches and all(p.angle is None for p in patches)

    def test_too_large(self, scene):
        with pytest.raises(PatchTooLarge):
            augment_image(*scene, AugmentParams(patch_size=256), "s")

    def test_file_name(self, scene):
        p = augment_image(*scene, AugmentParams(patch_size=64, flips=False), "img7")[0]
        assert p.name == f"img7_{p.row}_{p.col}_r0_f"

    @pytest.mark.parametrize("kwargs", [
        {"patch_size": 16}, {"stride_frac_min": 0.5, "stride_frac_max": 0.4},
        {"stride_frac_min": 0.0}, {"rotation_min": 90, "rotation_max": 90}, {"rotation_bands": 0},
    ])
    def test_invalid_params(self, kwargs):
        with pytest.raises(ValueError):
            AugmentParams(**kwargs)


def three_class_mask(counts, shape=(20, 20)):
    flat = np.full(shape[0] * shape[1], ClassId.VOID, np.uint8)
    start = 0
    for c, n in enumerate(counts):
        flat[start:start + n] = c
        start += n
    return flat.reshape(shape)


class TestPixelSampling:
    def test_exact_counts(self):
        mask = three_class_mask((150, 100, 120))
        sel = sample_class_balanced_pixels(mask, 50, Policy.DISCARD, rng=0)
        assert sel.counts_per_class.tolist() == [50, 50, 50]
        flat = sel.rows * 20 + sel.cols
        assert len(np.unique(flat)) == 150
        assert (mask[sel.rows, sel.cols] == sel.classes).all()

    def test_missing_class_discarded(self):
        assert sample_class_balanced_pixels(three_class_mask((200, 200, 0)), 10, "discard", rng=0) is None

    def test_fewer_than_n_discarded(self):
        assert sample_class_balanced_pixels(three_class_mask((100, 100, 9)), 10, "discard", rng=0) is None
        sel = sample_class_balanced_pixels(three_class_mask((100, 100, 10)), 10, "discard", rng=0)
        assert sel.counts_per_class.tolist() == [10, 10, 10]

    def test_two_per_class(self):
        sel = sample_class_balanced_pixels(three_class_mask((50, 50, 50)), 2, Policy.TAKE_ALL, rng=0)
        assert len(sel) == 6

    def test_take_all_keeps_scarce_classes(self):
        sel = sample_class_balanced_pixels(three_class_mask((100, 3, 0)), 10, Policy.TAKE_ALL, rng=0)
        assert sel.counts_per_class.tolist() == [10, 3, 0]

    def test_void_never_selected(self):
        mask = three_class_mask((30, 30, 30))
        sel = sample_class_balanced_pixels(mask, 1000, Policy.TAKE_ALL, rng=0)
        assert len(sel) == 90 and (mask[sel.rows, sel.cols] != ClassId.VOID).all()

    def test_resampling_differs(self):
        mask = three_class_mask((150, 100, 120))
        a = sample_class_balanced_pixels(mask, 20, rng=1)
        b = sample_class_balanced_pixels(mask, 20, rng=2)
        assert not np.array_equal(a.rows * 20 + a.cols, b.rows * 20 + b.cols)

    def test_uniform_over_class_pixels(self):
        mask = three_class_mask((10, 10, 10))
        rng = np.random.default_rng(0)
        hits = np.zeros(400)
        draws = 3000
        for _ in range(draws):
            sel = sample_class_balanced_pixels(mask, 2, rng=rng)
            hits[sel.rows * 20 + sel.cols] += 1
        freq = hits[:30] / draws
        assert np.abs(freq - 0.2).max() < 0.04
