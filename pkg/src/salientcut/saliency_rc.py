"""Region-contrast saliency.

The image is partitioned by graph-based segmentation (Felzenszwalb &
Huttenlocher criterion over an 8-connected grid with Lab edge weights);
each region is then scored by its color contrast to all other regions,
weighted by their size and a Gaussian falloff in centroid distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DimensionMismatch
from .imagecore import rgb_to_lab
from .quantize import ColorPalette, palette_for_image
from .saliency_hc import SaliencyMap, normalize_map

DEFAULT_SCALE_K = 50.0
DEFAULT_MIN_SIZE = 50
DEFAULT_SIGMA_S = 0.4  # Gaussian falloff scale in normalized-diagonal units


@dataclass(frozen=True)
class RegionMap:
    labels: np.ndarray      # (H, W) int32, dense ids in [0, R)
    sizes: np.ndarray       # (R,) int64 pixel counts
    centroids: np.ndarray   # (R, 2) float64 (x, y) normalized by image diagonal
    color_hists: np.ndarray  # (R, K) float64, rows sum to 1 over the palette

    @property
    def num_regions(self) -> int:
        return len(self.sizes)


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _fh_merge(n_nodes, edge_u, edge_v, edge_w, order, scale_k, min_size):
    parent = np.arange(n_nodes)
    size = np.ones(n_nodes, dtype=np.int64)
    # internal difference threshold per component: k / |C| initially k
    threshold = np.full(n_nodes, scale_k)
    for idx in order:
        a = _find(parent, edge_u[idx])
        b = _find(parent, edge_v[idx])
        if a == b:
            continue
        w = edge_w[idx]
        if w <= threshold[a] and w <= threshold[b]:
            parent[b] = a
            size[a] += size[b]
            threshold[a] = w + scale_k / size[a]
    # post-pass: absorb small components along their most similar edges
    for idx in order:
        a = _find(parent, edge_u[idx])
        b = _find(parent, edge_v[idx])
        if a != b and (size[a] < min_size or size[b] < min_size):
            parent[b] = a
            size[a] += size[b]
    roots = np.empty(n_nodes, dtype=np.int64)
    for i in range(n_nodes):
        roots[i] = _find(parent, i)
    return roots


def _grid_edges(lab: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """8-connected pixel graph; weight = Lab distance between endpoints."""
    h, w = lab.shape[:2]
    idx = np.arange(h * w).reshape(h, w)
    us, vs, ws = [], [], []
    for dy, dx in ((0, 1), (1, 0), (1, 1), (1, -1)):
        if dx >= 0:
            a = idx[: h - dy, : w - dx]
            b = idx[dy:, dx:]
            la = lab[: h - dy, : w - dx]
            lb = lab[dy:, dx:]
        else:
            a = idx[: h - dy, -dx:]
            b = idx[dy:, :dx]
            la = lab[: h - dy, -dx:]
            lb = lab[dy:, :dx]
        us.append(a.ravel())
        vs.append(b.ravel())
        d = la - lb
        ws.append(np.sqrt((d * d).sum(axis=2)).ravel())
    return np.concatenate(us), np.concatenate(vs), np.concatenate(ws)


def segment_regions(img: np.ndarray, scale_k: float = DEFAULT_SCALE_K,
                    min_size: int = DEFAULT_MIN_SIZE,
                    coverage: float = 0.95,
                    palette: ColorPalette | None = None,
                    palette_idx: np.ndarray | None = None) -> RegionMap:
    """Graph-based segmentation plus per-region stats over the palette.

    Deterministic: edges are processed in stable (weight, index) order.
    """
    if scale_k <= 0:
        raise ValueError("scale_k must be > 0")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    h, w = img.shape[:2]
    lab = rgb_to_lab(img)
    eu, ev, ew = _grid_edges(lab)
    order = np.argsort(ew, kind="stable")
    roots = _fh_merge(h * w, eu.astype(np.int64), ev.astype(np.int64),
                      ew, order.astype(np.int64), float(scale_k), int(min_size))
    _, labels_flat = np.unique(roots, return_inverse=True)
    labels = labels_flat.reshape(h, w).astype(np.int32)
    n_regions = labels_flat.max() + 1

    sizes = np.bincount(labels_flat, minlength=n_regions).astype(np.int64)
    xs = np.tile(np.arange(w, dtype=np.float64), h)
    ys = np.repeat(np.arange(h, dtype=np.float64), w)
    diag = float(np.hypot(w, h))
    cx = np.bincount(labels_flat, weights=xs, minlength=n_regions) / sizes
    cy = np.bincount(labels_flat, weights=ys, minlength=n_regions) / sizes
    centroids = np.stack([cx / diag, cy / diag], axis=1)

    if palette is None or palette_idx is None:
        palette_idx, palette = palette_for_image(img, coverage)
    flat_pal = palette_idx.ravel()
    hists = np.zeros((n_regions, palette.size))
    np.add.at(hists, (labels_flat, flat_pal), 1.0)
    hists /= sizes[:, None]
    return RegionMap(labels=labels, sizes=sizes, centroids=centroids,
                     color_hists=hists)


def region_contrast_matrix(palette: ColorPalette) -> np.ndarray:
    """Pairwise Lab distances between retained palette colors."""
    lab = palette.lab_colors()
    diff = lab[:, None, :] - lab[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def rc_saliency(img: np.ndarray, regions: RegionMap | None = None,
                sigma_s: float = DEFAULT_SIGMA_S, coverage: float = 0.95,
                scale_k: float = DEFAULT_SCALE_K,
                min_size: int = DEFAULT_MIN_SIZE) -> SaliencyMap:
    """Region-contrast saliency map.

    Region k scores sum_i exp(-d(k,i)^2 / sigma_s^2) * size_i/total *
    D(k,i), with D the histogram-weighted mean pairwise Lab distance
    between the regions' palette colors.
    """
    palette_idx, palette = palette_for_image(img, coverage)
    if regions is None:
        regions = segment_regions(img, scale_k, min_size,
                                  palette=palette, palette_idx=palette_idx)
    if regions.labels.shape != img.shape[:2]:
        raise DimensionMismatch(f"{regions.labels.shape} vs {img.shape[:2]}")
    raw_regions = rc_region_saliency(regions, palette, sigma_s)
    return normalize_map(raw_regions[regions.labels])


def rc_region_saliency(regions: RegionMap, palette: ColorPalette,
                       sigma_s: float = DEFAULT_SIGMA_S) -> np.ndarray:
    """Raw per-region salience values (no normalization)."""
    n = regions.num_regions
    if n == 1:
        return np.zeros(1)
    dist_mat = region_contrast_matrix(palette)
    # D[i, j] = h_i^T dist h_j, computed for all region pairs at once
    color_contrast = regions.color_hists @ dist_mat @ regions.color_hists.T
    diff = regions.centroids[:, None, :] - regions.centroids[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    spatial = np.exp(-d2 / (sigma_s * sigma_s))
    weights = regions.sizes / regions.sizes.sum()
    contrib = spatial * color_contrast * weights[None, :]
    np.fill_diagonal(contrib, 0.0)
    return contrib.sum(axis=1)
