"""Displacement-field warping and surface-consistent brightness modulation.

The rendering pipeline turns a gene into a perturbed image:
height field -> gradient displacement -> backward bilinear warp ->
normalized-field brightness map -> clamped multiplicative shading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import CenterSet, centers_for_gene, total_field
from .genes import AppearanceParams, WrinkleGene
from .image_io import Image, clamp_unit


@dataclass(frozen=True)
class DisplacementField:
    """Per-pixel sampling offsets in normalized units."""

    r_u: np.ndarray
    r_v: np.ndarray

    def __post_init__(self):
        if self.r_u.shape != self.r_v.shape:
            raise ValueError("displacement components must share a shape")
        if not (np.isfinite(self.r_u).all() and np.isfinite(self.r_v).all()):
            raise ValueError("displacement field contains non-finite values")


def displacement_field(z: np.ndarray, gain_u: float, gain_v: float) -> DisplacementField:
    """Scaled spatial gradient of the height field.

    Central differences in the interior, one-sided at borders; the step is
    one pixel expressed in normalized units (1/W horizontally, 1/H
    vertically).
    """
    h, w = z.shape
    dz_dv, dz_du = np.gradient(z, 1.0 / h, 1.0 / w)
    return DisplacementField(r_u=gain_u * dz_du, r_v=gain_v * dz_dv)


def warp_image(img: Image, disp: DisplacementField) -> Image:
    """Backward-warp: each output pixel bilinearly samples the input at
    its displaced position, with sampling coordinates clamped to the border.
    """
    h, w = img.height, img.width
    if disp.r_u.shape != (h, w):
        raise ValueError(f"displacement shape {disp.r_u.shape} != image shape {(h, w)}")
    jj, ii = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    xs = np.clip(jj + disp.r_u * w, 0.0, w - 1.0)
    ys = np.clip(ii + disp.r_v * h, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[:, :, None]
    fy = (ys - y0)[:, :, None]
    src = img.data
    out = (
        src[y0, x0] * (1 - fy) * (1 - fx)
        + src[y0, x1] * (1 - fy) * fx
        + src[y1, x0] * fy * (1 - fx)
        + src[y1, x1] * fy * fx
    )
    return Image(np.clip(out, 0.0, 1.0))


def normalize_field(z: np.ndarray, eps: float) -> np.ndarray:
    """Min-max normalize the field; constant fields map to all zeros."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    z_min, z_max = z.min(), z.max()
    return (z - z_min) / (z_max - z_min + eps)


def brightness_map(z_hat: np.ndarray, app: AppearanceParams) -> np.ndarray:
    """Shading map: base brightness plus amplitude-scaled normalized field."""
    return app.base + app.amplitude * z_hat


def apply_appearance(warped: Image, shading: np.ndarray) -> Image:
    """Multiply shading into every channel, then clamp to the unit interval."""
    if shading.shape != (warped.height, warped.width):
        raise ValueError(f"shading shape {shading.shape} != image shape")
    return clamp_unit(warped.data * shading[:, :, None])


def render_perturbation(img: Image, gene: WrinkleGene,
                        centers: CenterSet | None = None) -> Image:
    """Full deterministic rendering map from (image, gene) to perturbed image."""
    if centers is None:
        centers = centers_for_gene(gene)
    z = total_field(gene, img.height, img.width, centers)
    disp = displacement_field(z, gene.gain_u, gene.gain_v)
    warped = warp_image(img, disp)
    z_hat = normalize_field(z, gene.appearance.eps)
    shading = brightness_map(z_hat, gene.appearance)
    return apply_appearance(warped, shading)


def render_debug(img: Image, gene: WrinkleGene) -> dict[str, np.ndarray]:
    """Intermediate maps for debug dumps: field, displacement magnitude, shading."""
    centers = centers_for_gene(gene)
    z = total_field(gene, img.height, img.width, centers)
    disp = displacement_field(z, gene.gain_u, gene.gain_v)
    z_hat = normalize_field(z, gene.appearance.eps)
    return {
        "field": z,
        "displacement": np.hypot(disp.r_u, disp.r_v),
        "brightness": brightness_map(z_hat, gene.appearance),
    }
