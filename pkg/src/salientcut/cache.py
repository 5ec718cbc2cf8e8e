"""Content-addressed cache of segmentation maps.

Every image is hashed over its decoded pixels; the expensive cut runs
once per distinct hash and the rendered map lands on disk under
maps/<first two hex>/<hash>.png. A line-oriented manifest keyed by the
cut parameter fingerprint makes lookups and audits trivial.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import augment
from .errors import (ManifestMissing, MissingEntry, StaleEntry,
                     VersionMismatch)
from .imagecore import decode, encode_png, read_image
from .saliencycut import CutParams, cut_to_colormap

MANIFEST_NAME = "manifest.v1.tsv"
MANIFEST_VERSION = "cache.v1"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def hash_image(img: np.ndarray) -> str:
    """256-bit content digest of (width, height, channels, pixel bytes).

    Independent of file name and container: the same pixels always hash
    to the same key no matter how they were stored.
    """
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, c = img.shape
    digest = hashlib.sha256()
    for v in (w, h, c):
        digest.update(int(v).to_bytes(4, "little"))
    digest.update(np.ascontiguousarray(img).tobytes())
    return digest.hexdigest()


@dataclass
class ManifestEntry:
    key: str
    rel_path: str
    width: int
    height: int
    created: float


@dataclass
class CacheManifest:
    params_fingerprint: str
    entries: dict = field(default_factory=dict)  # key -> ManifestEntry

    def write(self, root: Path) -> None:
        tmp = root / (MANIFEST_NAME + ".tmp")
        with open(tmp, "w") as f:
            f.write(f"{MANIFEST_VERSION}\t{self.params_fingerprint}\n")
            for key in sorted(self.entries):
                e = self.entries[key]
                f.write(f"{e.key}\t{e.rel_path}\t{e.width}\t{e.height}\t"
                        f"{e.created:.3f}\n")
        os.replace(tmp, root / MANIFEST_NAME)

    @classmethod
    def read(cls, root: Path) -> "CacheManifest":
        path = Path(root) / MANIFEST_NAME
        if not path.exists():
            raise ManifestMissing(str(path))
        with open(path) as f:
            header = f.readline().rstrip("\n").split("\t")
            if len(header) != 2 or header[0] != MANIFEST_VERSION:
                raise VersionMismatch(f"bad manifest header: {header}")
            manifest = cls(params_fingerprint=header[1])
            for line in f:
                parts = line.rstrip("\n").split("\t")
                e = ManifestEntry(parts[0], parts[1], int(parts[2]),
                                  int(parts[3]), float(parts[4]))
                manifest.entries[e.key] = e
        return manifest


def map_rel_path(key: str) -> str:
    return f"maps/{key[:2]}/{key}.png"


def _compute_one(args):
    path, params, colormap_seed = args
    img = read_image(path)
    key = hash_image(img)
    rendered, report = cut_to_colormap(img, params, colormap_seed=colormap_seed)
    return key, rendered, report.status, img.shape[1], img.shape[0]


@dataclass
class BuildStats:
    computed: int = 0
    skipped: int = 0
    no_salient: int = 0


def list_images(image_dir) -> list[Path]:
    paths = [p for p in sorted(Path(image_dir).iterdir())
             if p.suffix.lower() in IMAGE_SUFFIXES]
    return paths


def build_cache(image_dir, cache_root, params: CutParams | None = None,
                jobs: int = 1, colormap_seed: int = 0
                ) -> tuple[CacheManifest, BuildStats]:
    """Run the cut once per distinct image hash and write the manifest.

    Idempotent: a rerun skips every key whose map file already exists
    under the same parameter fingerprint. Failures on individual images
    do not abort the build.
    """
    if params is None:
        params = CutParams()
    root = Path(cache_root)
    root.mkdir(parents=True, exist_ok=True)
    fingerprint = params.fingerprint()

    existing = CacheManifest(params_fingerprint=fingerprint)
    try:
        prev = CacheManifest.read(root)
        if prev.params_fingerprint == fingerprint:
            existing = prev
    except (ManifestMissing, VersionMismatch):
        pass

    paths = list_images(image_dir)
    if not paths:
        raise FileNotFoundError(f"no decodable images under {image_dir}")

    stats = BuildStats()
    todo = []
    seen_keys = set()
    for p in paths:
        img = read_image(p)
        key = hash_image(img)
        if key in seen_keys:
            continue
        seen_keys.add(key)
        entry = existing.entries.get(key)
        if entry is not None and (root / entry.rel_path).exists():
            stats.skipped += 1
            continue
        todo.append((p, key))

    manifest = CacheManifest(params_fingerprint=fingerprint)
    for key in seen_keys:
        if key in existing.entries:
            manifest.entries[key] = existing.entries[key]

    work = [(p, params, colormap_seed) for p, _ in todo]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_compute_one, work, chunksize=4))
    else:
        results = [_compute_one(w) for w in work]

    for key, rendered, status, w, h in results:
        rel = map_rel_path(key)
        out_path = root / rel
        out_path.parent.mkdir(parents=True, exist_ok=True)
        tmp = out_path.with_suffix(".tmp")
        with open(tmp, "wb") as f:
            f.write(encode_png(rendered))
        os.replace(tmp, out_path)
        manifest.entries[key] = ManifestEntry(key, rel, w, h, time.time())
        stats.computed += 1
        if status != "ok":
            stats.no_salient += 1
    manifest.write(root)
    return manifest, stats


class CacheStore:
    """Read-side handle over a built cache directory."""

    def __init__(self, root, strict: bool = False, preload: bool = False,
                 params: CutParams | None = None):
        self.root = Path(root)
        self.strict = strict
        self.params = params or CutParams()
        self.manifest = CacheManifest.read(self.root)
        self._memory: dict[str, np.ndarray] = {}
        if preload:
            self.preload()

    def preload(self) -> None:
        for key, entry in self.manifest.entries.items():
            self._memory[key] = self._read_map(entry)

    def _read_map(self, entry: ManifestEntry) -> np.ndarray:
        with open(self.root / entry.rel_path, "rb") as f:
            return decode(f.read())

    def lookup(self, img: np.ndarray) -> np.ndarray:
        """Raw cached map for an image; strict misses raise, lenient
        misses compute inline."""
        key = hash_image(img)
        hit = self._memory.get(key)
        if hit is not None:
            return hit
        entry = self.manifest.entries.get(key)
        if entry is None:
            if self.strict:
                raise MissingEntry(key)
            rendered, _ = cut_to_colormap(img, self.params)
            return rendered
        if (entry.width, entry.height) != (img.shape[1], img.shape[0]):
            raise StaleEntry(key)
        return self._read_map(entry)

    def fetch(self, img: np.ndarray, seed: int = 0,
              jitter: bool = True) -> np.ndarray:
        """Cached segmentation map, optionally palette-jittered by seed."""
        seg = self.lookup(img)
        if jitter:
            seg = augment.palette_jitter(seg, seed)
        return seg


@dataclass
class VerifyReport:
    checked: int = 0
    missing_files: list = field(default_factory=list)
    hash_mismatches: list = field(default_factory=list)
    params_drift: bool = False

    @property
    def findings(self) -> int:
        return (len(self.missing_files) + len(self.hash_mismatches)
                + (1 if self.params_drift else 0))


def verify(cache_root, params: CutParams | None = None,
           sample_fraction: float = 1.0, seed: int = 0) -> VerifyReport:
    """Audit a cache: file presence on all entries, map decodability on a
    random sample, and parameter fingerprint drift. Report-only."""
    root = Path(cache_root)
    manifest = CacheManifest.read(root)
    report = VerifyReport()
    if params is not None and params.fingerprint() != manifest.params_fingerprint:
        report.params_drift = True
    keys = sorted(manifest.entries)
    rng = np.random.default_rng(seed)
    n_sample = max(1, int(round(sample_fraction * len(keys)))) if keys else 0
    sampled = set(rng.choice(len(keys), size=n_sample, replace=False)) if keys else set()
    for i, key in enumerate(keys):
        entry = manifest.entries[key]
        path = root / entry.rel_path
        if not path.exists():
            report.missing_files.append(key)
            continue
        if i in sampled:
            report.checked += 1
            seg = decode(path.read_bytes())
            if (seg.shape[1], seg.shape[0]) != (entry.width, entry.height):
                report.hash_mismatches.append(key)
    return report
