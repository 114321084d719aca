"""Image container plus PNG/PPM loading, saving, and unit-interval clamping."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage


class ImageError(Exception):
    """Unreadable, unwritable, or structurally invalid image."""


@dataclass(frozen=True)
class Image:
    """H x W x C raster with float64 channel values in [0, 1].

    ``data`` always has three axes; grayscale images carry a trailing
    axis of length 1.
    """

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ImageError(f"expected HxWxC array, got shape {self.data.shape}")
        h, w, c = self.data.shape
        if c not in (1, 3):
            raise ImageError(f"channel count must be 1 or 3, got {c}")
        if h < 8 or w < 8:
            raise ImageError(f"image must be at least 8x8, got {h}x{w}")
        if not np.isfinite(self.data).all():
            raise ImageError("image contains non-finite values")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise ImageError("image values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def luminance(self) -> np.ndarray:
        """H x W grayscale plane (channel mean for RGB)."""
        return self.data.mean(axis=2)


def load_image(path: str | Path) -> Image:
    """Load an 8-bit PNG or binary PPM, scaling channel bytes by 1/255."""
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("P", "RGBA", "LA", "PA"):
                im = im.convert("L" if mode in ("LA", "PA") else "RGB")
                mode = im.mode
            if mode not in ("L", "RGB"):
                raise ImageError(f"unsupported image mode {mode!r} in {path}")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except ImageError:
        raise
    except FileNotFoundError as exc:
        raise ImageError(f"cannot read image {path}: {exc}") from exc
    except Exception as exc:
        raise ImageError(f"cannot decode image {path}: {exc}") from exc
    if arr.size == 0:
        raise ImageError(f"zero-sized image {path}")
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return Image(arr)


def quantize(img: Image) -> np.ndarray:
    """8-bit encoding of an image: round-half-up of v*255."""
    return np.floor(img.data * 255.0 + 0.5).astype(np.uint8)


def _to_pil(img: Image) -> PILImage.Image:
    arr = quantize(img)
    if arr.shape[2] == 1:
        return PILImage.fromarray(arr[:, :, 0], mode="L")
    return PILImage.fromarray(arr, mode="RGB")


def save_image(img: Image, path: str | Path) -> None:
    """Write an 8-bit PNG (grayscale or RGB depending on channel count)."""
    path = Path(path)
    try:
        _to_pil(img).save(path, format="PNG")
    except Exception as exc:
        raise ImageError(f"cannot write image {path}: {exc}") from exc


def png_bytes(img: Image) -> bytes:
    """In-memory 8-bit PNG encoding (used by the HTTP oracle protocol)."""
    buf = io.BytesIO()
    _to_pil(img).save(buf, format="PNG")
    return buf.getvalue()


def clamp_unit(img: Image | np.ndarray) -> Image:
    """Project every element onto [0, 1]."""
    data = img.data if isinstance(img, Image) else np.asarray(img, dtype=np.float64)
    return Image(np.clip(data, 0.0, 1.0))


def resize_bilinear(img: Image, height: int, width: int) -> Image:
    """Resample to a new resolution with bilinear interpolation."""
    if (img.height, img.width) == (height, width):
        return img
    src = img.data
    ys = (np.arange(height) + 0.5) * img.height / height - 0.5
    xs = (np.arange(width) + 0.5) * img.width / width - 0.5
    ys = np.clip(ys, 0.0, img.height - 1.0)
    xs = np.clip(xs, 0.0, img.width - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, img.height - 1)
    x1 = np.minimum(x0 + 1, img.width - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    out = (
        src[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
        + src[np.ix_(y0, x1)] * (1 - fy) * fx
        + src[np.ix_(y1, x0)] * fy * (1 - fx)
        + src[np.ix_(y1, x1)] * fy * fx
    )
    return Image(np.clip(out, 0.0, 1.0))
