import numpy as np
import pytest

import cv2


def natural_image(w, h, seed=0, object_color=(230, 80, 50)):
    """Smooth pseudo-photo with a central elliptical object."""
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 256, (max(2, h // 8), max(2, w // 8), 3)).astype(np.uint8)
    img = cv2.resize(base, (w, h), interpolation=cv2.INTER_CUBIC)
    yy, xx = np.mgrid[0:h, 0:w]
    m = ((xx - w / 2) ** 2 / (w / 4) ** 2 + (yy - h / 2) ** 2 / (h / 4) ** 2) < 1
    img[m] = (0.5 * img[m] + 0.5 * np.array(object_color)).astype(np.uint8)
    return img


def disk_image(size=128, radius=None, fg=(220, 60, 40), bg=(30, 120, 200)):
    """Flat background with a centered disk; returns (image, truth mask)."""
    if radius is None:
        radius = size // 4
    yy, xx = np.mgrid[0:size, 0:size]
    mask = ((xx - size // 2) ** 2 + (yy - size // 2) ** 2) < radius ** 2
    img = np.full((size, size, 3), bg, dtype=np.uint8)
    img[mask] = fg
    return img, mask


def iou(a, b):
    union = (a | b).sum()
    return 1.0 if union == 0 else (a & b).sum() / union


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
