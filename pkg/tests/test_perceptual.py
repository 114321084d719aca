import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from skimage.metrics import structural_similarity as sk_ssim

from tests.conftest import smooth_image
from wrinkle_attack.image_io import Image
from wrinkle_attack.perceptual import (PerceptualConfig, PerceptualError,
                                       blend_similarity, perceptual_distance,
                                       perceptual_similarity, ssim)


class _CannedMetricHandler(BaseHTTPRequestHandler):
    distance = 0.125

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        json.loads(self.rfile.read(length))  # must be valid JSON
        body = json.dumps({"distance": type(self).distance}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def metric_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _CannedMetricHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def test_self_ssim_exactly_one(rgb_image):
    assert ssim(rgb_image, rgb_image) == 1.0


def test_constant_pair_closed_form():
    c1 = 0.01**2
    a = Image(np.full((32, 32, 1), 0.2))
    b = Image(np.full((32, 32, 1), 0.8))
    closed = (2 * 0.2 * 0.8 + c1) / (0.2**2 + 0.8**2 + c1)
    assert ssim(a, b) == pytest.approx(closed, abs=1e-9)
    assert ssim(a, b) < 1.0


def test_tiny_noise_stays_high():
    img = smooth_image(21)
    r = np.random.default_rng(0)
    noisy = Image(np.clip(img.data + r.uniform(-1, 1, img.data.shape) / 255.0, 0, 1))
    assert ssim(img, noisy) >= 0.98


def test_matches_reference_implementation():
    # Oracle: scikit-image's Gaussian-weighted SSIM on the luminance plane.
    for seed in range(6):
        a = smooth_image(seed + 1)
        r = np.random.default_rng(seed)
        b = Image(np.clip(a.data + r.normal(0, 0.08, a.data.shape), 0, 1))
        ref = sk_ssim(a.luminance(), b.luminance(), data_range=1.0,
                      gaussian_weights=True, sigma=1.5,
                      use_sample_covariance=False)
        assert ssim(a, b) == pytest.approx(ref, abs=1e-4)


def test_ssim_errors():
    a = smooth_image(1, 32, 32)
    b = smooth_image(1, 32, 24)
    with pytest.raises(PerceptualError):
        ssim(a, b)
    small = smooth_image(2, 8, 8)
    with pytest.raises(PerceptualError):
        ssim(small, small)  # smaller than the 11-tap window


def test_config_validation():
    with pytest.raises(PerceptualError):
        PerceptualConfig(alpha1=1.5)
    with pytest.raises(PerceptualError):
        PerceptualConfig(window=4)
    with pytest.raises(PerceptualError):
        PerceptualConfig(backend="external")  # endpoint required
    with pytest.raises(PerceptualError):
        PerceptualConfig(backend="lpips")


def test_backend_none_distance_zero(rgb_image):
    cfg = PerceptualConfig(backend="none")
    other = smooth_image(99)
    assert perceptual_distance(rgb_image, other, cfg) == 0.0
    assert cfg.effective_alpha1 == 0.0


def test_blend_arithmetic():
    assert blend_similarity(0.9, 0.2, 0.7) == pytest.approx(0.83, abs=1e-12)
    assert blend_similarity(1.0, 0.0, 0.3) == 1.0
    assert blend_similarity(-0.5, 1.0, 0.0) == 0.0  # clamped


def test_similarity_self_is_one(rgb_image):
    assert perceptual_similarity(rgb_image, rgb_image) == 1.0


def test_alpha1_zero_equals_clamped_ssim(rgb_image):
    warped = smooth_image(31)
    cfg = PerceptualConfig(alpha1=0.0)
    expected = min(1.0, max(0.0, ssim(rgb_image, warped, cfg)))
    assert perceptual_similarity(rgb_image, warped, cfg) == expected


@settings(max_examples=80)
@given(
    s1=st.floats(-1, 1), s2=st.floats(-1, 1),
    d1=st.floats(0, 1), d2=st.floats(0, 1),
    a=st.floats(0, 1),
)
def test_blend_monotone(s1, s2, d1, d2, a):
    lo_s, hi_s = sorted((s1, s2))
    assert blend_similarity(hi_s, d1, a) >= blend_similarity(lo_s, d1, a)
    lo_d, hi_d = sorted((d1, d2))
    assert blend_similarity(s1, lo_d, a) >= blend_similarity(s1, hi_d, a)


@settings(max_examples=30, deadline=None)
@given(s=st.floats(-1, 1), d=st.floats(0, 1), a=st.floats(0, 1))
def test_blend_in_unit_interval(s, d, a):
    assert 0.0 <= blend_similarity(s, d, a) <= 1.0


def test_external_backend_replay(metric_server, rgb_image):
    cfg = PerceptualConfig(backend="external", endpoint=metric_server, alpha1=0.7)
    other = smooth_image(60)
    assert perceptual_distance(rgb_image, other, cfg) == 0.125
    expected = blend_similarity(ssim(rgb_image, other, cfg), 0.125, 0.7)
    assert perceptual_similarity(rgb_image, other, cfg) == expected


def test_external_backend_out_of_range(metric_server, rgb_image):
    cfg = PerceptualConfig(backend="external", endpoint=metric_server)
    _CannedMetricHandler.distance = 1.7
    try:
        with pytest.raises(PerceptualError):
            perceptual_distance(rgb_image, rgb_image, cfg)
    finally:
        _CannedMetricHandler.distance = 0.125


def test_external_backend_unreachable(rgb_image):
    cfg = PerceptualConfig(backend="external", endpoint="http://127.0.0.1:1",
                           timeout=0.2, retries=1)
    with pytest.raises(PerceptualError):
        perceptual_distance(rgb_image, rgb_image, cfg)
