"""Fixed 12-levels-per-channel color quantization and histogram reduction.

Each RGB channel is quantized to 12 levels, giving at most 12^3 = 1728
distinct bins. The occupied bins form a frequency-sorted histogram which
is then reduced to the smallest prefix covering a target fraction of the
pixels; every dropped bin is remapped to its nearest retained color in
Lab space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyHistogram
from .imagecore import rgb_to_lab_colors

LEVELS = 12
NUM_BINS = LEVELS ** 3

PALETTE_MANIFEST_VERSION = "palette.v1"


@dataclass(frozen=True)
class ColorHistogram:
    """Occupied quantization bins sorted by descending frequency.

    Ties are broken by ascending bin index so the ordering is unique.
    """

    bins: np.ndarray        # (n,) int32 bin indices
    freqs: np.ndarray       # (n,) float64, sums to 1
    rep_colors: np.ndarray  # (n, 3) float64 mean RGB of each bin's pixels


@dataclass(frozen=True)
class ColorPalette:
    """Retained prefix of a reduced histogram plus the bin remap table.

    ``remap`` has one slot per quantization bin; occupied bins map to an
    index into the retained arrays and unoccupied bins hold -1.
    """

    bins: np.ndarray        # (k,) int32 retained bin indices
    rep_colors: np.ndarray  # (k, 3) float64
    freqs: np.ndarray       # (k,) float64 pre-merge frequencies of retained bins
    merged_freqs: np.ndarray  # (k,) float64 frequencies after dropped mass merges in
    remap: np.ndarray       # (NUM_BINS,) int32

    @property
    def size(self) -> int:
        return len(self.bins)

    def lab_colors(self) -> np.ndarray:
        return rgb_to_lab_colors(self.rep_colors)


def quantize_image(img: np.ndarray) -> np.ndarray:
    """Quantize an HxWx3 uint8 image to per-pixel bin indices in [0, 1727]."""
    chan = (img.astype(np.int32) * LEVELS) // 256
    return chan[..., 0] * LEVELS * LEVELS + chan[..., 1] * LEVELS + chan[..., 2]


def build_histogram(quantized: np.ndarray, img: np.ndarray) -> ColorHistogram:
    """Histogram of occupied bins with mean-RGB representative colors."""
    if quantized.shape != img.shape[:2]:
        raise DimensionMismatch(f"{quantized.shape} vs {img.shape[:2]}")
    flat = quantized.ravel()
    counts = np.bincount(flat, minlength=NUM_BINS)
    occupied = np.nonzero(counts)[0]
    n_pixels = flat.size
    freqs = counts[occupied] / n_pixels

    pix = img.reshape(-1, 3).astype(np.float64)
    sums = np.zeros((NUM_BINS, 3))
    for c in range(3):
        sums[:, c] = np.bincount(flat, weights=pix[:, c], minlength=NUM_BINS)
    reps = sums[occupied] / counts[occupied][:, None]

    # unique sort key: frequency descending, then bin index ascending
    order = np.lexsort((occupied, -freqs))
    return ColorHistogram(
        bins=occupied[order].astype(np.int32),
        freqs=freqs[order],
        rep_colors=reps[order],
    )


def reduce_histogram(hist: ColorHistogram, coverage: float = 0.95) -> ColorPalette:
    """Keep the minimal frequency-sorted prefix covering >= ``coverage``.

    Dropped bins are remapped to the retained color nearest in Lab;
    distance ties go to the higher-frequency (hence earlier) entry.
    """
    if not 0.0 < coverage <= 1.0:
        raise ValueError("coverage must be in (0, 1]")
    n = len(hist.bins)
    if n == 0:
        raise EmptyHistogram("histogram has no entries")
    cum = np.cumsum(hist.freqs)
    k = int(np.searchsorted(cum, coverage - 1e-12)) + 1
    k = min(k, n)

    remap = np.full(NUM_BINS, -1, dtype=np.int32)
    remap[hist.bins[:k]] = np.arange(k, dtype=np.int32)

    merged = hist.freqs[:k].copy()
    if k < n:
        lab_all = rgb_to_lab_colors(hist.rep_colors)
        kept_lab = lab_all[:k]
        for i in range(k, n):
            d = np.linalg.norm(kept_lab - lab_all[i], axis=1)
            # argmin takes the first minimum; entries are sorted by frequency
            # desc then bin asc, which is exactly the required tie-break
            j = int(np.argmin(d))
            remap[hist.bins[i]] = j
            merged[j] += hist.freqs[i]

    return ColorPalette(
        bins=hist.bins[:k].copy(),
        rep_colors=hist.rep_colors[:k].copy(),
        freqs=hist.freqs[:k].copy(),
        merged_freqs=merged,
        remap=remap,
    )


def palette_for_image(img: np.ndarray, coverage: float = 0.95) -> tuple[np.ndarray, ColorPalette]:
    """Quantize, histogram, and reduce in one step.

    Returns the per-pixel retained-palette index map and the palette.
    """
    q = quantize_image(img)
    hist = build_histogram(q, img)
    pal = reduce_histogram(hist, coverage)
    return pal.remap[q], pal


def save_palette(path, palette: ColorPalette) -> None:
    """Write the retained entries as a small versioned text manifest."""
    with open(path, "w") as f:
        f.write(f"{PALETTE_MANIFEST_VERSION}\n")
        for b, rgb, fr in zip(palette.bins, palette.rep_colors, palette.freqs):
            f.write(f"{b}\t{rgb[0]:.6f}\t{rgb[1]:.6f}\t{rgb[2]:.6f}\t{fr:.9f}\n")


def load_palette(path) -> ColorPalette:
    with open(path) as f:
        header = f.readline().strip()
        if header != PALETTE_MANIFEST_VERSION:
            raise ValueError(f"unexpected palette manifest version: {header!r}")
        bins, colors, freqs = [], [], []
        for line in f:
            parts = line.split("\t")
            bins.append(int(parts[0]))
            colors.append([float(parts[1]), float(parts[2]), float(parts[3])])
            freqs.append(float(parts[4]))
    bins_arr = np.array(bins, dtype=np.int32)
    remap = np.full(NUM_BINS, -1, dtype=np.int32)
    remap[bins_arr] = np.arange(len(bins), dtype=np.int32)
    freqs_arr = np.array(freqs)
    return ColorPalette(
        bins=bins_arr,
        rep_colors=np.array(colors),
        freqs=freqs_arr,
        merged_freqs=freqs_arr.copy(),
        remap=remap,
    )
