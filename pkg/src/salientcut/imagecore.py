"""Image buffers, codecs, color conversion, resizing and binary morphology.

Images are numpy arrays: uint8 HxWx3 for RGB, bool HxW for masks,
float64 HxWx3 for Lab. Trimaps are uint8 HxW with the TRIMAP_* labels.
All functions are pure; nothing here keeps global state.
"""

from __future__ import annotations

import io

import cv2
import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import CorruptStream, UnsupportedFormat, WrongChannelCount

TRIMAP_BG = 0
TRIMAP_UNKNOWN = 1
TRIMAP_FG = 2


def decode(data: bytes) -> np.ndarray:
    """Decode a PNG or JPEG byte stream to an HxWx3 uint8 RGB array.

    Grayscale inputs are replicated to 3 channels. Decoding is pinned to
    Pillow so JPEG output is reproducible across runs.
    """
    try:
        img = Image.open(io.BytesIO(data))
        if img.format not in ("PNG", "JPEG"):
            raise UnsupportedFormat(f"unsupported format: {img.format}")
        img.load()
    except UnsupportedFormat:
        raise
    except UnidentifiedImageError as e:
        raise UnsupportedFormat(str(e)) from e
    except Exception as e:  # truncated/corrupt stream
        raise CorruptStream(str(e)) from e
    if img.mode not in ("RGB", "L"):
        img = img.convert("RGB")
    arr = np.asarray(img, dtype=np.uint8)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return arr


def encode_png(img: np.ndarray) -> bytes:
    """Encode an RGB or grayscale uint8 array to PNG bytes (lossless)."""
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="PNG")
    return buf.getvalue()


def read_image(path) -> np.ndarray:
    with open(path, "rb") as f:
        return decode(f.read())


def write_png(path, img: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(encode_png(img))


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


# D65 reference white
_XN, _YN, _ZN = 0.95047, 1.0, 1.08883
_RGB2XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)


def _lab_from_unit_rgb(rgb: np.ndarray) -> np.ndarray:
    rgb = _srgb_to_linear(rgb)
    xyz = rgb @ _RGB2XYZ.T
    xyz /= np.array([_XN, _YN, _ZN])
    eps = 216.0 / 24389.0
    kappa = 24389.0 / 27.0
    f = np.where(xyz > eps, np.cbrt(xyz), (kappa * xyz + 16.0) / 116.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Convert HxWx3 uint8 sRGB to CIE Lab (D65), float64.

    L is in [0, 100]; a and b are signed.
    """
    if img.ndim != 3 or img.shape[2] != 3:
        raise WrongChannelCount(f"expected HxWx3, got {img.shape}")
    return _lab_from_unit_rgb(img.astype(np.float64) / 255.0)


def rgb_to_lab_colors(colors: np.ndarray) -> np.ndarray:
    """Convert an Nx3 array of RGB colors (0..255 floats allowed) to Lab."""
    c = np.clip(np.asarray(colors, dtype=np.float64), 0.0, 255.0)
    return _lab_from_unit_rgb(c / 255.0)


def resize(img: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Bilinear resize to (new_w, new_h); identity when the size matches."""
    if new_w < 1 or new_h < 1:
        raise ValueError("target size must be >= 1")
    h, w = img.shape[:2]
    if (w, h) == (new_w, new_h):
        return img.copy()
    return cv2.resize(img, (new_w, new_h), interpolation=cv2.INTER_LINEAR)


def _footprint(radius: int) -> np.ndarray:
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation with a square (2r+1)-side element; outside is BG."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=_footprint(radius), border_value=0)


def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary erosion, square element; outside counts as BG so borders shrink."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return mask.copy()
    return ndimage.binary_erosion(mask, structure=_footprint(radius), border_value=0)
