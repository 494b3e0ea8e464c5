import sys

import numpy as np
import pytest

from riverice.ablation import LabelledImage
from riverice.synth import SceneSpec, generate_scene


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_mask(rng, shape, n_classes=3):
    return rng.integers(0, n_classes, size=shape).astype(np.uint8)


def small_corpus(n_train, n_test, size=96, noise_std=8.0, seed=7):
    spec = SceneSpec(height=size, width=size, n_frazil_pans=4, n_anchor_pans=4,
                     radius_range=(6.0, 16.0), noise_std=noise_std, seed=seed)
    test_spec = SceneSpec(**{**spec.__dict__, "seed": seed + 1000})
    train = [LabelledImage(f"train_{i:03d}", *generate_scene(spec, i)) for i in range(n_train)]
    test = [LabelledImage(f"test_{i:03d}", *generate_scene(test_spec, i)) for i in range(n_test)]
    return train, test


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(module.RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
