"""Salient-region detection, iterative graph-cut segmentation, and a
content-addressed offline augmentation cache."""

__version__ = "0.1.0"

from .augment import (AugOp, AugPolicy, apply_policy, palette_jitter,
                      preset_policies)
from .cache import CacheStore, build_cache, hash_image, verify
from .gmm import GmmModel, fit_gmm
from .graphcut import CutResult, FlowGraph, max_flow
from .imagecore import decode, encode_png, resize, rgb_to_lab
from .quantize import build_histogram, quantize_image, reduce_histogram
from .saliency_hc import SaliencyMap, hc_saliency
from .saliency_rc import RegionMap, rc_saliency, segment_regions
from .saliencycut import (CutParams, IterationReport, binarize,
                          mask_to_trimap, saliency_cut,
                          segmentation_to_colormap)

__all__ = [
    "__version__",
    "AugOp", "AugPolicy", "apply_policy", "palette_jitter", "preset_policies",
    "CacheStore", "build_cache", "hash_image", "verify",
    "GmmModel", "fit_gmm",
    "CutResult", "FlowGraph", "max_flow",
    "decode", "encode_png", "resize", "rgb_to_lab",
    "build_histogram", "quantize_image", "reduce_histogram",
    "SaliencyMap", "hc_saliency",
    "RegionMap", "rc_saliency", "segment_regions",
    "CutParams", "IterationReport", "binarize", "mask_to_trimap",
    "saliency_cut", "segmentation_to_colormap",
]
