"""Perceptual similarity: native SSIM blended with an optional external
deep-perceptual distance served over the oracle protocol."""

from __future__ import annotations

import base64
from dataclasses import dataclass

import numpy as np
import requests

from .image_io import Image, png_bytes


class PerceptualError(Exception):
    """Unusable perceptual configuration or backend response."""


@dataclass(frozen=True)
class PerceptualConfig:
    alpha1: float = 0.7
    window: int = 11
    sigma: float = 1.5
    c1: float = 0.01**2
    c2: float = 0.03**2
    backend: str = "none"  # "none" | "external"
    endpoint: str = ""
    timeout: float = 10.0
    retries: int = 2

    def __post_init__(self):
        if not 0.0 <= self.alpha1 <= 1.0:
            raise PerceptualError("alpha1 must lie in [0, 1]")
        if self.window < 3 or self.window % 2 == 0:
            raise PerceptualError("ssim window must be odd and >= 3")
        if self.c1 <= 0 or self.c2 <= 0:
            raise PerceptualError("ssim constants must be > 0")
        if self.backend not in ("none", "external"):
            raise PerceptualError(f"unknown backend {self.backend!r}")
        if self.backend == "external" and not self.endpoint:
            raise PerceptualError("external backend requires an endpoint")

    @property
    def effective_alpha1(self) -> float:
        """Without a deep-perceptual backend, the blend is SSIM-only."""
        return self.alpha1 if self.backend == "external" else 0.0


def _gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    r = np.arange(window, dtype=np.float64) - (window - 1) / 2.0
    k = np.exp(-(r**2) / (2.0 * sigma**2))
    k2 = np.outer(k, k)
    return k2 / k2.sum()


def _filter_valid(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-mode weighted local means over sliding windows."""
    win = kernel.shape[0]
    windows = np.lib.stride_tricks.sliding_window_view(plane, (win, win))
    return np.tensordot(windows, kernel, axes=([2, 3], [0, 1]))


def ssim(x: Image, x_prime: Image, cfg: PerceptualConfig = PerceptualConfig()) -> float:
    """Mean local SSIM over Gaussian-weighted windows on the luminance plane."""
    if (x.height, x.width, x.channels) != (x_prime.height, x_prime.width, x_prime.channels):
        raise PerceptualError("ssim requires identically shaped images")
    if min(x.height, x.width) < cfg.window:
        raise PerceptualError(
            f"image {x.height}x{x.width} smaller than ssim window {cfg.window}")
    a = x.luminance()
    b = x_prime.luminance()
    kernel = _gaussian_kernel(cfg.window, cfg.sigma)
    mu_a = _filter_valid(a, kernel)
    mu_b = _filter_valid(b, kernel)
    var_a = _filter_valid(a * a, kernel) - mu_a * mu_a
    var_b = _filter_valid(b * b, kernel) - mu_b * mu_b
    cov = _filter_valid(a * b, kernel) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + cfg.c1) * (2.0 * cov + cfg.c2)
    den = (mu_a * mu_a + mu_b * mu_b + cfg.c1) * (var_a + var_b + cfg.c2)
    return float(np.mean(num / den))


def _b64_png(img: Image) -> str:
    return base64.b64encode(png_bytes(img)).decode("ascii")


def perceptual_distance(x: Image, x_prime: Image,
                        cfg: PerceptualConfig = PerceptualConfig()) -> float:
    """Deep-perceptual dissimilarity in [0, 1] from the configured backend.

    Backend "none" returns 0; callers must then run with effective_alpha1,
    which is forced to 0.
    """
    if cfg.backend == "none":
        return 0.0
    body = {"image_a_png_b64": _b64_png(x), "image_b_png_b64": _b64_png(x_prime)}
    url = cfg.endpoint.rstrip("/") + "/v1/perceptual"
    last_exc: Exception | None = None
    for _ in range(cfg.retries + 1):
        try:
            resp = requests.post(url, json=body, timeout=cfg.timeout)
            resp.raise_for_status()
            distance = resp.json()["distance"]
            break
        except Exception as exc:  # noqa: BLE001 - retried, re-raised below
            last_exc = exc
    else:
        raise PerceptualError(f"perceptual backend unreachable: {last_exc}")
    if not isinstance(distance, (int, float)) or not np.isfinite(distance):
        raise PerceptualError(f"non-numeric distance from backend: {distance!r}")
    if not 0.0 <= distance <= 1.0:
        raise PerceptualError(f"backend distance {distance} outside [0, 1]")
    return float(distance)


def blend_similarity(s_ssim: float, deep_distance: float, alpha1: float) -> float:
    """Weighted blend of structural and deep-perceptual similarity, in [0, 1]."""
    blended = (1.0 - alpha1) * s_ssim + alpha1 * (1.0 - deep_distance)
    return float(min(1.0, max(0.0, blended)))


def perceptual_similarity(x: Image, x_prime: Image,
                          cfg: PerceptualConfig = PerceptualConfig()) -> float:
    s = ssim(x, x_prime, cfg)
    d = perceptual_distance(x, x_prime, cfg)
    return blend_similarity(s, d, cfg.effective_alpha1)
