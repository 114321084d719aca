from pathlib import Path

import numpy as np
import pytest

from wrinkle_attack.image_io import Image

DATA_DIR = Path(__file__).parent / "data"


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    from tests import test_acceptance

    name = test_acceptance.CRITERIA.get(report.nodeid.split("::")[-1])
    if name:
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {verdict}", flush=True)


def smooth_image(seed: int, height: int = 32, width: int = 32,
                 channels: int = 3) -> Image:
    """Deterministic smooth test image (blobs on a gradient)."""
    r = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.linspace(0, 1, height), np.linspace(0, 1, width),
                         indexing="ij")
    base = 0.3 + 0.4 * (r.random() * xx + r.random() * yy)
    img = np.repeat(base[:, :, None], channels, axis=2)
    for _ in range(3):
        cy, cx, s = r.random(), r.random(), 0.15 + 0.2 * r.random()
        amp = r.uniform(-0.35, 0.35, size=channels)
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
        img += blob[:, :, None] * amp[None, None, :]
    return Image(np.clip(img, 0.02, 0.98))


@pytest.fixture
def rgb_image() -> Image:
    return smooth_image(11)


@pytest.fixture
def gray_image() -> Image:
    return smooth_image(12, channels=1)
