"""Thin in-process bindings for training-loop dataset transforms.

Everything here is marshalling: array shapes and dtypes are checked at
the boundary, then the call is forwarded to the core library, which owns
all behavior. A :class:`BoundCache` can be shared across loader workers;
:func:`transform` is reentrant.
"""

from __future__ import annotations

import numpy as np

import salientcut
from salientcut import CacheStore, CutParams, saliency_cut
from salientcut.errors import (ManifestMissing, MissingEntry, ShapeError,
                               StaleEntry, VersionMismatch)

__version__ = salientcut.__version__

__all__ = [
    "BoundCache", "open_cache", "transform", "compute_cut",
    "ManifestMissing", "MissingEntry", "ShapeError", "StaleEntry",
    "VersionMismatch", "__version__",
]


class BoundCache:
    """Read-only handle over an opened segmentation cache."""

    def __init__(self, store: CacheStore, preload: bool):
        self._store = store
        self._preload = preload

    @property
    def preloaded(self) -> bool:
        return self._preload

    def __len__(self) -> int:
        return len(self._store.manifest.entries)


def open_cache(root_path, preload: bool = False,
               strict: bool = True, params: dict | None = None) -> BoundCache:
    """Open a built cache directory.

    With ``preload=True`` every map is decoded into memory once, so
    subsequent :func:`transform` calls never touch the disk.
    """
    cut_params = CutParams(**params) if params else None
    store = CacheStore(root_path, strict=strict, preload=preload,
                       params=cut_params)
    return BoundCache(store, preload)


def _check_pixels(arr: np.ndarray) -> np.ndarray:
    if not isinstance(arr, np.ndarray):
        raise ShapeError(f"expected ndarray, got {type(arr).__name__}")
    if arr.dtype != np.uint8:
        raise ShapeError(f"expected uint8 pixels, got {arr.dtype}")
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ShapeError(f"expected HxWx3 array, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


def transform(bound: BoundCache, pixels: np.ndarray, seed: int = 0,
              jitter: bool = True) -> np.ndarray:
    """Cached segmentation map for an image array, optionally recolored.

    The output is a fresh array owned by the caller; input bytes are
    never mutated.
    """
    arr = _check_pixels(pixels)
    out = bound._store.fetch(arr, seed=seed, jitter=jitter)
    return np.ascontiguousarray(out)


def compute_cut(pixels: np.ndarray, params: dict | None = None,
                with_status: bool = False):
    """Inline escape hatch: run the full cut and return a 0/1 uint8 mask.

    ``with_status=True`` additionally returns the cut status string
    ("ok" or "no_salient_object").
    """
    arr = _check_pixels(pixels)
    cut_params = CutParams(**params) if params else CutParams()
    mask, report = saliency_cut(arr, cut_params)
    out = mask.astype(np.uint8)
    if with_status:
        return out, report.status
    return out
