"""The full pipeline: saliency map -> threshold -> iterative GMM +
graph-cut refinement with trimap morphology between iterations.

Everything is deterministic in (pixels, params, seed): the GMMs are
refit from scratch each iteration with a fixed seed and the solver uses
a fixed arc order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import graphcut
from .errors import DegenerateMask
from .gmm import fit_gmm, log_likelihood_per_pixel
from .imagecore import (TRIMAP_BG, TRIMAP_FG, TRIMAP_UNKNOWN, dilate, erode,
                        rgb_to_lab)
from .quantize import palette_for_image
from .saliency_hc import SaliencyMap, hc_saliency, palette_color_saliency
from .saliency_rc import rc_saliency


@dataclass(frozen=True)
class CutParams:
    threshold: int = 70
    max_iters: int = 4
    morph_radius: int = 0  # 0 = auto: max(1, round(0.01 * image diagonal))
    convergence_eps: float = 0.001
    gmm_k: int = 5
    lam: float = 50.0
    beta: float = 0.0  # 0 = auto from mean neighbor color difference
    sigma_s: float = 0.4
    coverage: float = 0.95
    saliency_mode: str = "rc"  # "hc" or "rc"
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.threshold <= 255:
            raise ValueError("threshold must be in [0, 255]")
        if self.saliency_mode not in ("hc", "rc"):
            raise ValueError("saliency_mode must be 'hc' or 'rc'")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def fingerprint(self) -> str:
        """Stable short digest used to key cache manifests."""
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class IterationReport:
    status: str = "ok"  # "ok" or "no_salient_object"
    iterations: int = 0
    change_fractions: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    converged: bool = False


def binarize(smap: SaliencyMap, threshold: int) -> np.ndarray:
    """Foreground where the normalized salience >= threshold."""
    if not 0 <= threshold <= 255:
        raise ValueError("threshold must be in [0, 255]")
    return smap.values >= threshold


def auto_morph_radius(h: int, w: int) -> int:
    return max(1, round(0.01 * float(np.hypot(w, h))))


def mask_to_trimap(mask: np.ndarray, morph_radius: int) -> np.ndarray:
    """Erode for definite-FG, dilate for the BG boundary, band is UNKNOWN."""
    if morph_radius < 1:
        raise ValueError("morph_radius must be >= 1")
    fg = erode(mask, morph_radius)
    maybe = dilate(mask, morph_radius)
    tri = np.full(mask.shape, TRIMAP_BG, dtype=np.uint8)
    tri[maybe] = TRIMAP_UNKNOWN
    tri[fg] = TRIMAP_FG
    if not fg.any() and not (maybe & ~fg).any():
        raise DegenerateMask("no foreground or unknown pixels")
    return tri


# color-model fits use an even subsample of the labeled pixels; a few
# thousand samples pin down a 5-component mixture and keep EM cheap
MAX_GMM_FIT_SAMPLES = 8192


def _fit_subsample(samples: np.ndarray) -> np.ndarray:
    n = len(samples)
    if n <= MAX_GMM_FIT_SAMPLES:
        return samples
    stride = int(np.ceil(n / MAX_GMM_FIT_SAMPLES))
    return samples[::stride]


def compute_saliency(img: np.ndarray, params: CutParams) -> SaliencyMap:
    if params.saliency_mode == "hc":
        return hc_saliency(img, coverage=params.coverage)
    return rc_saliency(img, sigma_s=params.sigma_s, coverage=params.coverage)


def saliency_cut(img: np.ndarray, params: CutParams | None = None
                 ) -> tuple[np.ndarray, IterationReport]:
    """Segment the salient object; returns (mask, report).

    A degenerate saliency map (nothing above threshold, or no definite
    band) yields an all-background mask with status "no_salient_object"
    instead of raising, so batch runs never abort.
    """
    if params is None:
        params = CutParams()
    h, w = img.shape[:2]
    report = IterationReport()
    smap = compute_saliency(img, params)
    mask = binarize(smap, params.threshold)
    if not mask.any() or mask.all():
        # all-FG is just as unusable: there is no background to model
        report.status = "no_salient_object"
        return np.zeros((h, w), dtype=bool), report

    lab = rgb_to_lab(img)
    flat = lab.reshape(-1, 3)
    beta = params.beta if params.beta > 0 else graphcut.estimate_beta(lab)
    radius = params.morph_radius if params.morph_radius >= 1 else auto_morph_radius(h, w)

    for it in range(params.max_iters):
        try:
            tri = mask_to_trimap(mask, radius)
        except DegenerateMask:
            report.status = "no_salient_object"
            return np.zeros((h, w), dtype=bool), report
        fg_samples = _fit_subsample(flat[mask.ravel()])
        bg_samples = _fit_subsample(flat[~mask.ravel()])
        if len(fg_samples) == 0 or len(bg_samples) == 0:
            report.status = "no_salient_object"
            return np.zeros((h, w), dtype=bool), report
        fg_model = fit_gmm(fg_samples, params.gmm_k, params.seed)
        bg_model = fit_gmm(bg_samples, params.gmm_k, params.seed + 1)
        fg_nll = (-log_likelihood_per_pixel(fg_model, flat)).reshape(h, w)
        bg_nll = (-log_likelihood_per_pixel(bg_model, flat)).reshape(h, w)
        g = graphcut.build_mrf_graph(lab, fg_nll, bg_nll, tri,
                                     params.lam, beta)
        cut = graphcut.max_flow(g)
        new_mask = cut.source_side[: h * w].reshape(h, w)
        change = float(np.mean(new_mask != mask))
        report.change_fractions.append(change)
        report.energies.append(cut.flow_value)
        report.iterations = it + 1
        mask = new_mask
        if change < params.convergence_eps:
            report.converged = True
            break
        if not mask.any():
            report.status = "no_salient_object"
            return np.zeros((h, w), dtype=bool), report
    return mask, report


def segmentation_to_colormap(labels: np.ndarray, palette, seed: int = 0) -> np.ndarray:
    """Render a labeling (binary mask or region ids) with colors drawn
    from a reduced palette.

    Label 0 takes the lowest-salience palette color; the remaining
    labels get distinct colors via a seeded permutation of the rest.
    """
    color_sal = palette_color_saliency(palette)
    order = np.argsort(color_sal, kind="stable")  # ascending salience
    lab_int = labels.astype(np.int64)
    n_labels = int(lab_int.max()) + 1

    bg_color = palette.rep_colors[order[0]]
    rest = palette.rep_colors[order[1:]] if palette.size > 1 else palette.rep_colors[order]
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(rest))
    table = np.empty((n_labels, 3))
    table[0] = bg_color
    for i in range(1, n_labels):
        table[i] = rest[perm[(i - 1) % len(rest)]]
    return np.clip(np.round(table[lab_int]), 0, 255).astype(np.uint8)


def cut_to_colormap(img: np.ndarray, params: CutParams | None = None,
                    colormap_seed: int = 0) -> tuple[np.ndarray, IterationReport]:
    """saliency_cut plus palette-colored rendering, as the cache stores it."""
    if params is None:
        params = CutParams()
    mask, report = saliency_cut(img, params)
    _, palette = palette_for_image(img, params.coverage)
    rendered = segmentation_to_colormap(mask.astype(np.int64), palette,
                                        seed=colormap_seed)
    return rendered, report
