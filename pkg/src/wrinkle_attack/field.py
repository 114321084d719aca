"""Multi-scale wrinkle height field synthesis on the normalized image plane."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .genes import SCALES, ScaleParams, WrinkleGene
from .rng import Xoshiro256

# Fixed stream index per scale; part of the seeding schedule.
_SCALE_STREAM = {"large": 0, "medium": 1, "small": 2}


@dataclass(frozen=True)
class CenterSet:
    """Sampled wrinkle-source centers per scale, in [0,1]^2 coordinates."""

    large: tuple[tuple[float, float], ...]
    medium: tuple[tuple[float, float], ...]
    small: tuple[tuple[float, float], ...]

    def for_scale(self, scale: str) -> tuple[tuple[float, float], ...]:
        return getattr(self, scale)


def sample_centers(layer_counts: dict[str, int], seed: int) -> CenterSet:
    """Draw each scale's wrinkle-source centers uniformly from [0,1]^2.

    Each scale reads an independent substream of ``seed``, so the centers
    of one scale do not depend on another scale's layer count.
    """
    out = {}
    for scale in SCALES:
        rng = Xoshiro256(seed, stream=_SCALE_STREAM[scale])
        k = layer_counts[scale]
        if k < 1:
            raise ValueError(f"{scale} layer count must be >= 1")
        out[scale] = tuple((rng.uniform(), rng.uniform()) for _ in range(k))
    return CenterSet(**out)


def centers_for_gene(gene: WrinkleGene) -> CenterSet:
    counts = {s: gene.scale(s).layers for s in SCALES}
    return sample_centers(counts, gene.center_seed)


def oscillator(scale: str, d: np.ndarray | float, frequencies: tuple[float, ...]) -> np.ndarray:
    """Radial oscillation profile of one scale, evaluated at distance d.

    Large and small scales oscillate as sin(f*pi*d); the medium scale blends
    a sine and a cosine at two frequencies.
    """
    d = np.asarray(d, dtype=np.float64)
    if scale == "medium":
        f1, f2 = frequencies
        return 0.5 * (np.sin(f1 * np.pi * d) + np.cos(f2 * np.pi * d))
    (f,) = frequencies
    return np.sin(f * np.pi * d)


def _grid(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized pixel-center coordinates (u along width, v along height)."""
    u = (np.arange(width, dtype=np.float64) + 0.5) / width
    v = (np.arange(height, dtype=np.float64) + 0.5) / height
    return np.meshgrid(u, v)


def scale_component(height: int, width: int, params: ScaleParams,
                    centers: tuple[tuple[float, float], ...], scale: str) -> np.ndarray:
    """One scale's field: decaying oscillations superposed over its centers."""
    if len(centers) != params.layers:
        raise ValueError(f"{scale}: expected {params.layers} centers, got {len(centers)}")
    uu, vv = _grid(height, width)
    total = np.zeros((height, width), dtype=np.float64)
    for cu, cv in centers:
        d = np.sqrt((uu - cu) ** 2 + (vv - cv) ** 2)
        total += params.intensity * oscillator(scale, d, params.frequencies) * np.exp(-params.decay * d)
    return total


def total_field(gene: WrinkleGene, height: int, width: int,
                centers: CenterSet | None = None) -> np.ndarray:
    """Sum of the enabled scale components on an H x W grid."""
    if centers is None:
        centers = centers_for_gene(gene)
    total = np.zeros((height, width), dtype=np.float64)
    for scale in SCALES:
        if gene.mask.enabled(scale):
            total += scale_component(height, width, gene.scale(scale),
                                     centers.for_scale(scale), scale)
    return total
