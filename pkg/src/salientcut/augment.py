"""Augmentation policies: the default SSL transform set, the salient-
segmentation op, and palette jitter.

Randomness is counter-based (Philox keyed by a mix of global seed, image
content and epoch), so distributed loaders reproduce identical streams
with no coordination. Each op draws from its own counter slot: whether
it fires and its parameters never depend on what earlier ops drew.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import cv2
import numpy as np

from .errors import TooManyColors
from .imagecore import resize
from .quantize import palette_for_image
from .saliencycut import CutParams, cut_to_colormap

POLICY_FILE_VERSION = 1

OP_KINDS = ("SGD", "ResizedCrop", "Rotate", "HFlip", "VFlip",
            "ColorJitter", "Grayscale", "GaussianBlur", "PaletteJitter")

DEFAULT_CROP_SCALE = (0.2, 1.0)
DEFAULT_CROP_RATIO = (3.0 / 4.0, 4.0 / 3.0)
DEFAULT_JITTER = (0.4, 0.4, 0.4, 0.1)  # brightness, contrast, saturation, hue
DEFAULT_BLUR_SIGMA = (0.1, 2.0)


@dataclass(frozen=True)
class AugOp:
    kind: str
    p: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in OP_KINDS:
            raise ValueError(f"unknown op kind: {self.kind}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")


@dataclass(frozen=True)
class AugPolicy:
    name: str
    ops: tuple
    out_size: tuple | None = None  # (w, h); None keeps input size

    def __post_init__(self):
        # segmentation must run before any color op so color draws apply
        # to the rendered map, never the raw photo
        kinds = [op.kind for op in self.ops]
        if "SGD" in kinds:
            sgd_at = kinds.index("SGD")
            for i, k in enumerate(kinds):
                if k in ("ColorJitter", "Grayscale", "PaletteJitter") and i < sgd_at:
                    raise ValueError("SGD must precede color ops")


def _default_ops() -> list[AugOp]:
    return [
        AugOp("ResizedCrop", p=1.0),
        AugOp("Rotate", p=0.5),
        AugOp("HFlip", p=0.5),
        AugOp("VFlip", p=0.5),
        AugOp("ColorJitter", p=0.8),
        AugOp("Grayscale", p=0.2),
        AugOp("GaussianBlur", p=0.5),
    ]


def preset_policies() -> list[AugPolicy]:
    """The seven evaluation policies, defaults-only through
    segmentation-with-jitter at the published probabilities."""
    def sgd(p):
        return AugOp("SGD", p=p)

    def jit(p):
        return AugOp("PaletteJitter", p=p)

    return [
        AugPolicy("defaults", tuple(_default_ops())),
        AugPolicy("sgd_p10", (sgd(1.0),)),
        AugPolicy("sgd_p10_defaults", tuple([sgd(1.0)] + _default_ops())),
        AugPolicy("sgd_p05_defaults", tuple([sgd(0.5)] + _default_ops())),
        AugPolicy("sgd_p10_jitter_p10", (sgd(1.0), jit(1.0))),
        AugPolicy("sgd_p05_jitter_p10", (sgd(0.5), jit(1.0))),
        AugPolicy("sgd_p08_jitter_p08", (sgd(0.8), jit(0.8))),
    ]


def get_policy(name: str) -> AugPolicy:
    for pol in preset_policies():
        if pol.name == name:
            return pol
    raise KeyError(f"no preset policy named {name!r}")


def save_policy(path, policy: AugPolicy) -> None:
    doc = {
        "version": POLICY_FILE_VERSION,
        "name": policy.name,
        "out_size": list(policy.out_size) if policy.out_size else None,
        "ops": [{"kind": op.kind, "p": op.p, "params": op.params}
                for op in policy.ops],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)


def load_policy(path) -> AugPolicy:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("version") != POLICY_FILE_VERSION:
        raise ValueError(f"unsupported policy file version: {doc.get('version')}")
    ops = tuple(AugOp(o["kind"], o.get("p", 1.0), o.get("params", {}))
                for o in doc["ops"])
    out_size = tuple(doc["out_size"]) if doc.get("out_size") else None
    return AugPolicy(doc["name"], ops, out_size)


def mix_seed(global_seed: int, image: np.ndarray, epoch: int = 0) -> int:
    """Per-image stream key: mixes the run seed, pixel content and epoch."""
    h = hashlib.sha256()
    h.update(int(global_seed).to_bytes(8, "little", signed=False))
    h.update(int(epoch).to_bytes(8, "little", signed=False))
    h.update(np.ascontiguousarray(image).tobytes())
    return int.from_bytes(h.digest()[:8], "little")


def _op_rng(seed: int, op_index: int) -> np.random.Generator:
    bits = np.random.Philox(key=seed).jumped(op_index + 1)
    return np.random.default_rng(bits)


# --- individual transforms -------------------------------------------------

def resized_crop(img: np.ndarray, rng: np.random.Generator,
                 scale=DEFAULT_CROP_SCALE, ratio=DEFAULT_CROP_RATIO,
                 out_size=None) -> np.ndarray:
    """Random area/aspect crop, resized back to out_size (input size by default)."""
    h, w = img.shape[:2]
    if out_size is None:
        out_size = (w, h)
    area = h * w
    for _ in range(10):
        target_area = area * rng.uniform(scale[0], scale[1])
        log_ratio = np.log(ratio)
        aspect = np.exp(rng.uniform(log_ratio[0], log_ratio[1]))
        cw = int(round(np.sqrt(target_area * aspect)))
        ch = int(round(np.sqrt(target_area / aspect)))
        if 0 < cw <= w and 0 < ch <= h:
            x0 = int(rng.integers(0, w - cw + 1))
            y0 = int(rng.integers(0, h - ch + 1))
            crop = img[y0:y0 + ch, x0:x0 + cw]
            return resize(crop, out_size[0], out_size[1])
    return resize(img, out_size[0], out_size[1])


def rotate(img: np.ndarray, rng: np.random.Generator,
           right_angles: bool = True) -> np.ndarray:
    """Rotation; defaults to 90-degree multiples to keep segmentation maps
    partition-valid. Arbitrary angles use bilinear resampling."""
    if right_angles:
        turns = int(rng.integers(1, 4))
        return np.ascontiguousarray(np.rot90(img, turns))
    angle = float(rng.uniform(0.0, 360.0))
    h, w = img.shape[:2]
    mat = cv2.getRotationMatrix2D((w / 2.0, h / 2.0), angle, 1.0)
    return cv2.warpAffine(img, mat, (w, h), flags=cv2.INTER_LINEAR,
                          borderMode=cv2.BORDER_REFLECT)


def hflip(img: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(img[:, ::-1])


def vflip(img: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(img[::-1, :])


def _rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    return cv2.cvtColor(img, cv2.COLOR_RGB2HSV_FULL).astype(np.float64)


def _hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    return cv2.cvtColor(np.clip(hsv, 0, 255).astype(np.uint8),
                        cv2.COLOR_HSV2RGB_FULL)


def color_jitter(img: np.ndarray, rng: np.random.Generator,
                 strengths=DEFAULT_JITTER) -> np.ndarray:
    """Brightness/contrast/saturation/hue jitter with SimCLR-style ranges."""
    b, c, s, hmax = strengths
    out = img.astype(np.float64)
    out = out * rng.uniform(max(0.0, 1 - b), 1 + b)
    mean = out.mean()
    out = (out - mean) * rng.uniform(max(0.0, 1 - c), 1 + c) + mean
    out = np.clip(out, 0, 255).astype(np.uint8)
    hsv = _rgb_to_hsv(out)
    hsv[..., 1] *= rng.uniform(max(0.0, 1 - s), 1 + s)
    hsv[..., 0] = np.mod(hsv[..., 0] + rng.uniform(-hmax, hmax) * 255.0, 256.0)
    return _hsv_to_rgb(hsv)


def grayscale(img: np.ndarray) -> np.ndarray:
    luma = (0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2])
    luma = np.round(luma).astype(np.uint8)
    return np.repeat(luma[:, :, None], 3, axis=2)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D discrete Gaussian, truncated at 3 sigma, normalized to sum 1."""
    radius = max(1, int(np.ceil(3.0 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    out = img.astype(np.float64)
    out = cv2.sepFilter2D(out, -1, k, k, borderType=cv2.BORDER_REFLECT)
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def palette_jitter(seg: np.ndarray, seed: int) -> np.ndarray:
    """Recolor a segmentation map: permute its colors and perturb each in
    HSV, preserving exactly which pixels share a color."""
    flat = seg.reshape(-1, 3).astype(np.uint32)
    # pack RGB into one int: sorting packed values == lexicographic rows,
    # and 1-D unique is an order of magnitude faster than axis=0
    packed = (flat[:, 0] << 16) | (flat[:, 1] << 8) | flat[:, 2]
    uniq_packed, inverse = np.unique(packed, return_inverse=True)
    colors = np.stack([(uniq_packed >> 16) & 255, (uniq_packed >> 8) & 255,
                       uniq_packed & 255], axis=1).astype(np.uint8)
    n = len(colors)
    if n > 256:
        raise TooManyColors(f"{n} distinct colors; not a segmentation map")
    rng = np.random.default_rng(np.random.Philox(key=seed))
    perm = rng.permutation(n)
    base = colors[perm].astype(np.float64)

    hsv = cv2.cvtColor(base.reshape(1, -1, 3).astype(np.uint8),
                       cv2.COLOR_RGB2HSV_FULL).astype(np.float64)[0]
    hsv[:, 0] = np.mod(hsv[:, 0] + rng.uniform(-25, 25, size=n), 256.0)
    hsv[:, 1] = np.clip(hsv[:, 1] * rng.uniform(0.8, 1.2, size=n), 0, 255)
    hsv[:, 2] = np.clip(hsv[:, 2] * rng.uniform(0.8, 1.2, size=n), 0, 255)
    new_colors = cv2.cvtColor(hsv.reshape(1, -1, 3).astype(np.uint8),
                              cv2.COLOR_HSV2RGB_FULL)[0].astype(np.int64)

    # perturbation may collide distinct colors; nudge until injective again
    for _ in range(64):
        uniq = np.unique(new_colors, axis=0)
        if len(uniq) == n:
            break
        seen = {}
        for i in range(n):
            key = tuple(new_colors[i])
            if key in seen:
                bump = int(rng.integers(1, 8))
                new_colors[i, 2] = (new_colors[i, 2] + bump) % 256
            else:
                seen[key] = i
    out = new_colors.astype(np.uint8)[inverse]
    return out.reshape(seg.shape)


# --- policy application ----------------------------------------------------

def apply_policy(img: np.ndarray, policy: AugPolicy, seed: int,
                 cache=None, epoch: int = 0,
                 cut_params: CutParams | None = None) -> np.ndarray:
    """Apply a policy's ops in order; each fires on an independent draw.

    The SGD op resolves through ``cache`` (a CacheStore) when given,
    otherwise it computes the segmentation inline.
    """
    stream = mix_seed(seed, img, epoch)
    out = img
    for i, op in enumerate(policy.ops):
        rng = _op_rng(stream, i)
        if float(rng.random()) >= op.p:
            continue
        if op.kind == "SGD":
            if cache is not None:
                out = cache.fetch(out, seed=stream, jitter=False)
            else:
                out, _ = cut_to_colormap(out, cut_params)
        elif op.kind == "ResizedCrop":
            out = resized_crop(out, rng,
                               scale=op.params.get("scale", DEFAULT_CROP_SCALE),
                               ratio=op.params.get("ratio", DEFAULT_CROP_RATIO),
                               out_size=policy.out_size)
        elif op.kind == "Rotate":
            out = rotate(out, rng, right_angles=op.params.get("right_angles", True))
        elif op.kind == "HFlip":
            out = hflip(out)
        elif op.kind == "VFlip":
            out = vflip(out)
        elif op.kind == "ColorJitter":
            out = color_jitter(out, rng,
                               strengths=op.params.get("strengths", DEFAULT_JITTER))
        elif op.kind == "Grayscale":
            out = grayscale(out)
        elif op.kind == "GaussianBlur":
            lo, hi = op.params.get("sigma", DEFAULT_BLUR_SIGMA)
            out = gaussian_blur(out, float(rng.uniform(lo, hi)))
        elif op.kind == "PaletteJitter":
            out = palette_jitter(out, int(rng.integers(0, 2 ** 63)))
    if policy.out_size is not None:
        out = resize(out, policy.out_size[0], policy.out_size[1])
    return out
