"""Histogram-contrast saliency.

A color's salience is the frequency-weighted sum of its Lab distances to
every other retained palette color; pixels inherit the salience of the
palette color they remap to. Purely a function of the color histogram,
so spatially shuffling the pixels changes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantize import ColorPalette, palette_for_image


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray  # (H, W) uint8, min-max normalized
    raw: np.ndarray     # (H, W) float64 pre-normalization


def normalize_map(raw: np.ndarray) -> SaliencyMap:
    """Min-max normalize to [0, 255]; a constant field becomes all zeros."""
    lo = raw.min()
    hi = raw.max()
    if hi - lo <= 0:
        values = np.zeros(raw.shape, dtype=np.uint8)
    else:
        values = np.round((raw - lo) / (hi - lo) * 255.0).astype(np.uint8)
    return SaliencyMap(values=values, raw=raw.astype(np.float64))


def palette_color_saliency(palette: ColorPalette) -> np.ndarray:
    """Raw per-retained-color salience from pairwise Lab contrast.

    Frequencies are the post-merge ones (dropped bins count toward their
    remap target), renormalized to sum to 1.
    """
    lab = palette.lab_colors()
    freqs = palette.merged_freqs / palette.merged_freqs.sum()
    diff = lab[:, None, :] - lab[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    return dist @ freqs


def smooth_color_saliency(raw: np.ndarray, palette: ColorPalette, m: int) -> np.ndarray:
    """Replace each color's salience by a distance-weighted average over
    its m nearest palette colors (including itself). m=1 is the identity."""
    if m < 1:
        raise ValueError("m must be >= 1")
    n = len(raw)
    m = min(m, n)
    if m == 1:
        return raw.copy()
    lab = palette.lab_colors()
    diff = lab[:, None, :] - lab[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    out = np.empty_like(raw)
    for i in range(n):
        nn = np.argsort(dist[i], kind="stable")[:m]
        d = dist[i][nn]
        sigma_sq = (d * d).mean()
        if sigma_sq <= 0:
            out[i] = raw[nn].mean()
        else:
            # Gaussian falloff keeps every neighbor's weight positive
            w = np.exp(-(d * d) / sigma_sq)
            out[i] = (w * raw[nn]).sum() / w.sum()
    return out


def hc_saliency(img: np.ndarray, coverage: float = 0.95,
                smooth_m: int | None = None) -> SaliencyMap:
    """Histogram-contrast saliency map of an RGB image."""
    idx, palette = palette_for_image(img, coverage)
    color_sal = palette_color_saliency(palette)
    if smooth_m is not None:
        color_sal = smooth_color_saliency(color_sal, palette, smooth_m)
    return normalize_map(color_sal[idx])
